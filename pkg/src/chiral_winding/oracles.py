"""Slow, independent quadrature references over the complex plane.

Integrals over C with integrable simple poles are split by a smooth partition
of unity: a flat-top bump around each pole, integrated in local polar
coordinates (where rho * integrand is smooth), and the remainder in global
polar coordinates with the radius compactified as r = t / (1 - t). Radial
directions use composite Gauss-Legendre, angles the periodic trapezoid rule.
Refinement doubles both resolutions until successive levels agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BudgetExceededError, DomainError
from .specfun import skew_poly_even

__all__ = [
    "QuadratureResult",
    "quad_plane",
    "quad_J",
    "quad_skew_product",
    "heine_q2_check",
    "MAX_EVALUATIONS",
]

MAX_EVALUATIONS = 10_000_000
_GL_ORDER = 8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class QuadratureResult:
    """Value with an a-posteriori error estimate (difference of the last two levels)."""

    value: complex
    est_error: float
    evaluations: int
    history: tuple = field(default=())
    target: complex | None = None


def _gauss_nodes(a: float, b: float, panels: int):
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return x, w


def _psi(x):
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _bump(t):
    """C-infinity flat-top bump: 1 for t <= 1/2, 0 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = _psi(1.0 - t)
    b = _psi(t - 0.5)
    return a / (a + b)


def _local_disc(fun, center: complex, R: float, level: int):
    """int over |z - c| < R of fun(z) * bump(|z - c| / R), local polar coordinates."""
    rho, wr = _gauss_nodes(0.0, R, 2 * 2 ** level)
    m = 16 * 2 ** level
    th = np.arange(m) * (2 * np.pi / m)
    z = center + rho[:, None] * np.exp(1j * th)[None, :]
    vals = fun(z) * (rho * _bump(rho / R))[:, None]
    return complex(np.sum(wr[:, None] * vals) * (2 * np.pi / m)), z.size


def _outer_plane(fun, centers, radii, level: int):
    """int over C of fun(z) * (1 - sum of bumps), global polar with r = t/(1-t)."""
    t, wt = _gauss_nodes(0.0, 1.0, 4 * 2 ** level)
    r = t / (1.0 - t)
    jac = 1.0 / (1.0 - t) ** 2
    m = 32 * 2 ** level
    th = np.arange(m) * (2 * np.pi / m)
    z = r[:, None] * np.exp(1j * th)[None, :]
    cut = np.ones(z.shape)
    for c, R in zip(centers, radii):
        cut -= _bump(np.abs(z - c) / R)
    mask = cut > 0
    vals = np.zeros(z.shape, dtype=complex)
    vals[mask] = fun(z[mask]) * cut[mask]
    vals *= (r * jac)[:, None]
    return complex(np.sum(wt[:, None] * vals) * (2 * np.pi / m)), z.size


def quad_plane(fun: Callable[[np.ndarray], np.ndarray], poles=(), *, rtol: float = 1e-8,
               atol: float = 1e-14, max_evaluations: int = MAX_EVALUATIONS,
               min_level: int = 2) -> QuadratureResult:
    """Integrate ``fun`` (vectorized over complex arrays) over C with measure dx dy.

    ``poles`` lists points with integrable 1/|z - c| singularities; they must be
    distinct. Raises :class:`BudgetExceededError` past ``max_evaluations``.
    """
    poles = [complex(c) for c in poles]
    radii = []
    for i, c in enumerate(poles):
        d = min([abs(c - o) for j, o in enumerate(poles) if j != i], default=math.inf)
        if d == 0:
            raise DomainError("coincident poles are not integrable")
        radii.append(min(0.45 * d, 0.5))
    total_evals = 0
    history = []
    prev = None
    level = 0
    while True:
        value, n = _outer_plane(fun, poles, radii, level)
        total_evals += n
        for c, R in zip(poles, radii):
            v, n = _local_disc(fun, c, R, level)
            value += v
            total_evals += n
        if prev is not None:
            err = abs(value - prev)
            history.append((total_evals, err))
            if level >= min_level and err <= max(rtol * abs(value), atol):
                return QuadratureResult(value, err, total_evals, tuple(history))
        if total_evals > max_evaluations:
            raise BudgetExceededError(
                f"quadrature used {total_evals} evaluations without reaching rtol={rtol:g}")
        prev = value
        level += 1


def quad_J(kappa1: complex, kappa2: complex, N: int, **kw) -> QuadratureResult:
    """Quadrature of

        int d^2z (1 + |z|^2)^-(2N+2) / ((z + k1)(z* + k2)) * ((1 - k1* z) / (1 + |k1|^2))^(2N+1)

    whose simple poles sit at z = -k1 and z = -conj(k2).
    """
    k1, k2 = complex(kappa1), complex(kappa2)
    if k1 == k2:
        raise DomainError("kappa1 and kappa2 must differ")
    if not 1 <= N <= 4:
        raise DomainError("quad_J supports 1 <= N <= 4")
    n1 = 1.0 + abs(k1) ** 2

    def fun(z):
        r2 = np.abs(z) ** 2
        return ((1.0 - np.conj(k1) * z) / n1) ** (2 * N + 1) / (
            (1.0 + r2) ** (2 * N + 2) * (z + k1) * (np.conj(z) + k2))

    from .analytic import j_integral_closed_form
    res = quad_plane(fun, poles=(-k1, -np.conj(k2)), **kw)
    return QuadratureResult(res.value, res.est_error, res.evaluations, res.history,
                            j_integral_closed_form(k1, k2, N))


def _radial(fun, *, rtol: float, max_evaluations: int) -> QuadratureResult:
    """int_0^inf fun(r) dr with r = t/(1-t), refined by doubling panels."""
    prev, evals, history = None, 0, []
    level = 0
    while True:
        t, w = _gauss_nodes(0.0, 1.0, 4 * 2 ** level)
        r = t / (1.0 - t)
        value = float(np.sum(w * fun(r) / (1.0 - t) ** 2))
        evals += t.size
        if prev is not None:
            err = abs(value - prev)
            history.append((evals, err))
            if level >= 2 and err <= max(rtol * abs(value), 1e-300):
                return QuadratureResult(value, err, evals, tuple(history))
        if evals > max_evaluations:
            raise BudgetExceededError("radial quadrature exceeded its budget")
        prev = value
        level += 1


def quad_skew_product(a: int, b: int, N: int, *, rtol: float = 1e-12,
                      max_evaluations: int = MAX_EVALUATIONS) -> QuadratureResult:
    """<z^(a-1) | z^(b-1)> for the weight (z - z*) / (1 + |z|^2)^(2N+2).

    The angle is integrated exactly (only |a - b| = 1 survives, with weight
    +-2 pi); the radial integral is done numerically.
    """
    if min(a, b) < 1 or N < 1:
        raise DomainError("need a, b, N >= 1")
    if max(a, b) > 2 * N + 1:
        raise DomainError(f"need a, b <= 2N+1 for integrability, got a={a}, b={b}, N={N}")
    if b == a + 1:
        sign = 1.0
    elif a == b + 1:
        sign = -1.0
    else:
        return QuadratureResult(0.0 + 0j, 0.0, 0, ())
    s = a + b

    def radial(r):
        return r ** s / (1.0 + r * r) ** (2 * N + 2)

    res = _radial(radial, rtol=rtol, max_evaluations=max_evaluations)
    return QuadratureResult(complex(sign * 2 * math.pi * res.value), 2 * math.pi * res.est_error,
                            res.evaluations, res.history)


def heine_q2_check(N: int, x: float, **kw) -> QuadratureResult:
    """Quadrature of the one-variable Heine ratio for the degree-2 even polynomial.

    Numerator and denominator are integrated separately with the weight
    (z* - z)(z - z*) / (1 + |z|^2)^(2N+2); the result's ``target`` holds the
    closed-form polynomial value for comparison.
    """
    if not 1 <= N <= 4:
        raise DomainError("heine_q2_check supports 1 <= N <= 4")
    x = complex(x)

    def weight(z):
        return -((z - np.conj(z)) ** 2) / (1.0 + np.abs(z) ** 2) ** (2 * N + 2)

    num = quad_plane(lambda z: weight(z) * (z - x) * (np.conj(z) - x), **kw)
    den = quad_plane(weight, **kw)
    value = num.value / den.value
    err = abs(value) * (num.est_error / abs(num.value) + den.est_error / abs(den.value)) if num.value else \
        num.est_error / abs(den.value)
    return QuadratureResult(value, err, num.evaluations + den.evaluations, num.history,
                            skew_poly_even(1, N, x))
