"""Special functions and the even/odd skew-orthogonal polynomials of the
quaternion spherical weight ``(z - z*) / (1 + |z|^2)^(2N+2)``.

All Beta factors are handled in log-space so that weight indices up to
N = 64 stay finite.
"""

from __future__ import annotations

import cmath
import math
import warnings
from functools import lru_cache

import numpy as np
from scipy.special import betaln

from .errors import BranchCutError, DomainError, InternalConsistencyError, NearSingularWarning

__all__ = [
    "log_beta",
    "lerch_phi",
    "lerch_phi_closed",
    "lerch_phi_tail",
    "lerch_closed_form_loss",
    "skew_poly_even_coeffs",
    "skew_poly_even",
    "skew_poly_odd",
    "skew_norm",
    "monomial_skew_product",
    "poly_skew_product",
]

# Relative error budget for the closed Lerch form before the tail series is used.
LERCH_CLOSED_LOSS = 1e-14
_EPS = np.finfo(float).eps
_TAIL_MAX_TERMS = 200_000


def log_beta(x: float, y: float) -> float:
    """Natural log of Euler's Beta function B(x, y) for x, y > 0."""
    if not (x > 0 and y > 0):
        raise DomainError(f"log_beta needs positive arguments, got ({x}, {y})")
    return float(betaln(x, y))


# --------------------------------------------------------------------------
# Truncated Lerch transcendent: sum_{j >= n+1} z^(j-n-1) / j
# --------------------------------------------------------------------------

def _check_lerch_arg(n: int, z: complex) -> complex:
    if int(n) != n or n < 0:
        raise DomainError(f"lerch_phi order must be a nonnegative integer, got {n}")
    z = complex(z)
    if z.imag == 0.0 and z.real >= 1.0:
        raise BranchCutError(f"z = {z.real} lies on the branch cut [1, inf)")
    if abs(1.0 - z) < 1e-8:
        warnings.warn(f"lerch_phi argument {z} within 1e-8 of the log singularity",
                      NearSingularWarning, stacklevel=3)
    return z


def lerch_phi_tail(n: int, z: complex, *, tol: float = 1e-17) -> complex:
    """Tail-series evaluation, summed until terms drop below ``tol`` relative.

    Converges for |z| < 1; used as the production path where the closed form
    would cancel, and as an independent reference in tests.
    """
    z = _check_lerch_arg(n, z)
    if abs(z) >= 1.0:
        raise DomainError("tail series needs |z| < 1")
    total = 0.0 + 0.0j
    term_pow = 1.0 + 0.0j
    j = n + 1
    for _ in range(_TAIL_MAX_TERMS):
        t = term_pow / j
        total += t
        if abs(t) <= tol * abs(total):
            return total
        term_pow *= z
        j += 1
    return total


def lerch_closed_form_loss(n: int, z: complex) -> float:
    """Estimated relative rounding error of the closed (log) form at (n, z).

    The bracket ``ln(1-z) + sum z^j/j`` is a difference of terms of size
    ``|ln(1-z)| + sum |z|^j/j`` that leaves a remainder of size ~|z|^(n+1)/(n+1).
    """
    z = complex(z)
    if z == 0:
        return math.inf
    a = abs(z)
    size = abs(cmath.log(1.0 - z)) + sum(a ** j / j for j in range(1, n + 1))
    return _EPS * (n + 1) * size / a ** (n + 1)


def lerch_phi_closed(n: int, z: complex) -> complex:
    """Direct log-form evaluation ``-z^-(n+1) [ln(1-z) + sum_{j<=n} z^j/j]``.

    Accurate only when :func:`lerch_closed_form_loss` is small; kept separate
    so the two representations can be compared.
    """
    z = _check_lerch_arg(n, z)
    if z == 0:
        return complex(1.0 / (n + 1))
    partial = 0.0 + 0.0j
    zp = 1.0 + 0.0j
    for j in range(1, n + 1):
        zp *= z
        partial += zp / j
    return -(cmath.log(1.0 - z) + partial) / z ** (n + 1)


def lerch_phi(n: int, z: complex) -> complex:
    """Truncated Lerch transcendent of order n+1 at z (principal branch).

    Picks the tail series inside the unit disk unless the closed form is
    well conditioned there, and the closed form outside it.
    """
    z = _check_lerch_arg(n, z)
    if z == 0:
        return complex(1.0 / (n + 1))
    # Past |z| = 0.999 the tail needs too many terms; the log form is the only option.
    if abs(z) <= 0.999 and (abs(z) < 0.5 or lerch_closed_form_loss(n, z) > LERCH_CLOSED_LOSS):
        return lerch_phi_tail(n, z)
    return lerch_phi_closed(n, z)


# --------------------------------------------------------------------------
# Skew-orthogonal polynomials
# --------------------------------------------------------------------------

def _check_index(n: int, N: int) -> None:
    if int(n) != n or n < 0:
        raise DomainError(f"polynomial index must be a nonnegative integer, got {n}")
    if int(N) != N or N < 1:
        raise DomainError(f"weight index N must be a positive integer, got {N}")
    if n > N:
        raise DomainError(f"half-degree n={n} exceeds weight index N={N}")


@lru_cache(maxsize=None)
def _even_coeffs_cached(n: int, N: int) -> tuple:
    ln_top = betaln(n + 1, N - n + 0.5)
    logs = np.array([ln_top - betaln(m + 1, N - m + 0.5) for m in range(n + 1)])
    coeffs = np.exp(logs)
    coeffs[n] = 1.0
    _guard_even_coeffs(coeffs, n, N)
    return tuple(float(c) for c in coeffs)


def _guard_even_coeffs(coeffs: np.ndarray, n: int, N: int) -> None:
    """Positivity, monic leading term and the ratio recurrence
    c_{m+1}/c_m = (N - m - 1/2)/(m + 1)."""
    if not np.all(np.isfinite(coeffs)) or np.any(coeffs <= 0):
        raise InternalConsistencyError(f"non-positive coefficient in q_2n, (n, N) = ({n}, {N})")
    if coeffs[-1] != 1.0:
        raise InternalConsistencyError(f"q_2n not monic at (n, N) = ({n}, {N})")
    for m in range(n):
        expect = (N - m - 0.5) / (m + 1)
        got = coeffs[m + 1] / coeffs[m]
        if abs(got - expect) > 1e-11 * expect:
            raise InternalConsistencyError(
                f"coefficient ratio {got} != {expect} at m={m}, (n, N) = ({n}, {N})")


def skew_poly_even_coeffs(n: int, N: int) -> np.ndarray:
    """Coefficients of x^(2m), m = 0..n, of the monic even polynomial q_2n^(N)."""
    _check_index(n, N)
    return np.array(_even_coeffs_cached(int(n), int(N)))


def skew_poly_even(n: int, N: int, x):
    """Evaluate q_2n^(N)(x) by Horner's rule in x^2. Accepts scalars or arrays."""
    c = skew_poly_even_coeffs(n, N)
    x2 = np.asarray(x, dtype=complex) ** 2
    out = np.zeros_like(x2)
    for cm in c[::-1]:
        out = out * x2 + cm
    return complex(out) if out.ndim == 0 else out


def skew_poly_odd(n: int, x):
    """The odd skew-orthogonal polynomial x^(2n+1), independent of N."""
    if int(n) != n or n < 0:
        raise DomainError(f"polynomial index must be a nonnegative integer, got {n}")
    return np.asarray(x, dtype=complex) ** (2 * n + 1) if np.ndim(x) else complex(x) ** (2 * n + 1)


def skew_norm(j: int, N: int) -> float:
    """Normalization h_j = <q_2j | q_2j+1> = pi B(2j+2, 2N-2j), 0 <= j <= N-1."""
    if int(N) != N or N < 1 or int(j) != j or not 0 <= j <= N - 1:
        raise DomainError(f"skew_norm needs 0 <= j <= N-1, got j={j}, N={N}")
    return math.pi * math.exp(betaln(2 * j + 2, 2 * N - 2 * j))


def monomial_skew_product(a: int, b: int, N: int) -> float:
    """Antisymmetric kernel D_ab = 2 <z^(a-1) | z^(b-1)> for the weight index N.

    Nonzero only when |a - b| = 1.
    """
    if min(a, b) < 1 or N < 1:
        raise DomainError(f"monomial_skew_product needs a, b, N >= 1, got ({a}, {b}, {N})")
    sign = (1 if a == b - 1 else 0) - (1 if a - 1 == b else 0)
    if sign == 0:
        return 0.0
    s = 0.5 * (a + b + 1)
    x = 2 * N + 2 - s
    if x <= 0:
        raise DomainError(f"skew product diverges for a={a}, b={b}, N={N}")
    return sign * 2.0 * math.pi * math.exp(betaln(x, s))


def poly_skew_product(f_coeffs, g_coeffs, N: int) -> float:
    """Skew product <f | g> of two polynomials given by ascending coefficients.

    Exact by bilinearity over the monomial kernel: <z^i | z^k> = D_{i+1,k+1} / 2.
    """
    f = np.asarray(f_coeffs, dtype=float)
    g = np.asarray(g_coeffs, dtype=float)
    total = 0.0
    for i, fi in enumerate(f):
        if fi == 0:
            continue
        for k in (i - 1, i + 1):
            if 0 <= k < len(g) and g[k] != 0:
                total += fi * g[k] * 0.5 * monomial_skew_product(i + 1, k + 1, N)
    return total
