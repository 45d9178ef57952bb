"""Closed-form ensemble averages of determinant ratios for classes AIII and CII.

Everything is written in terms of the coefficient vectors v = (a, b) and the
bilinear invariants

    dot(u, w)  = u^T w          (transpose product)
    hdot(u, w) = u^dag w        (Hermitian product)
    cross(u, w)= u_a w_b - u_b w_a = i u^T tau2 w

so points with b = 0 are regular. CII kernels come in two normalizations:
``results`` (scale-free form) and ``derivation`` (kernels carrying per-point
factors of b and 2 pi). The factors cancel in the Pfaffian ratio.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentPointsError, DomainError, NearSingularWarning, NotSkewSymmetricError
from .field import CoefficientField
from .numerics import logdet, pfaffian
from .specfun import lerch_phi, skew_poly_even, skew_poly_even_coeffs

__all__ = [
    "GAUGES",
    "PointSets",
    "SkewKernelMatrix",
    "aiii_z11",
    "aiii_zkk",
    "aiii_c1",
    "cii_kernel_1",
    "cii_kernel_2",
    "cii_kernel_3",
    "skew_kernel_matrix",
    "cii_zkk",
    "j_integral_closed_form",
    "gauge_factor",
]

GAUGES = ("results", "derivation")
DISTINCT_TOL = 1e-8
NEAR_SINGULAR = 1e-8


# ---------------------------------------------------------------------------
# Invariants and log-space helpers
# ---------------------------------------------------------------------------

def _dot(u, w) -> complex:
    return u[0] * w[0] + u[1] * w[1]


def _hdot(u, w) -> complex:
    return np.conj(u[0]) * w[0] + np.conj(u[1]) * w[1]


def _cross(u, w) -> complex:
    return u[0] * w[1] - u[1] * w[0]


def _norm2(u) -> float:
    return float(abs(u[0]) ** 2 + abs(u[1]) ** 2)


# Numbers whose powers may overflow are carried as (log|x|, x/|x|). Phases are
# raised by repeated squaring rather than through arg(x), so negating x negates
# odd powers exactly and antisymmetric kernels stay antisymmetric to the bit.
_ZERO = (-math.inf, 1.0 + 0j)


def _polar(x: complex) -> tuple:
    x = complex(x)
    r = abs(x)
    if r == 0:
        return _ZERO
    return (math.log(r), x / r)


def _unit_pow(u: complex, k: int) -> complex:
    out = 1.0 + 0j
    while k:
        if k & 1:
            out *= u
        u *= u
        k >>= 1
    return out


def _ppow(p: tuple, k: int) -> tuple:
    # 0 ** 0 = 1.
    if k == 0:
        return (0.0, 1.0 + 0j)
    if k < 0:
        return (k * p[0], _unit_pow(p[1].conjugate(), -k))
    return (k * p[0], _unit_pow(p[1], k))


def _pmul(*ps) -> tuple:
    lm, u = 0.0, 1.0 + 0j
    for l, v in ps:
        lm += l
        u *= v
    return (lm, u)


def _pval(p: tuple) -> complex:
    if p[0] == -math.inf:
        return 0j
    return math.exp(p[0]) * p[1]


def _psum(ps) -> tuple:
    ps = [p for p in ps if p[0] != -math.inf]
    if not ps:
        return _ZERO
    top = max(p[0] for p in ps)
    s = sum(math.exp(l - top) * u for l, u in ps)
    if s == 0:
        return _ZERO
    l, u = _polar(s)
    return (top + l, u)


def _even_homog(n: int, N: int, u: complex, w: complex, deg: int) -> tuple:
    """sum_m c_m u^(2m) w^(deg-2m) in polar form, c_m the coefficients of q_2n^(N).

    Equals w^deg q_2n^(N)(u / w) without dividing by w.
    """
    c = skew_poly_even_coeffs(n, N)
    pu, pw = _polar(u), _polar(w)
    return _psum([
        _pmul((math.log(cm), 1.0 + 0j), _ppow(pu, 2 * m), _ppow(pw, deg - 2 * m))
        for m, cm in enumerate(c)
    ])


def _ipow(x: complex, k: int) -> complex:
    return _pval(_ppow(_polar(x), k))


def _check_gauge(gauge: str) -> None:
    if gauge not in GAUGES:
        raise DomainError(f"unknown gauge {gauge!r}; expected one of {GAUGES}")


def _vec(fld: CoefficientField, p: float) -> np.ndarray:
    a, b = fld.v(float(p))
    return np.array([complex(a), complex(b)])


def _resolve_N(fld: CoefficientField, N) -> int:
    N = fld.N if N is None else int(N)
    if N < 1:
        raise DomainError("N must be positive")
    return N


def _require_distinct(u, w, what: str) -> None:
    if abs(_cross(u, w)) <= DISTINCT_TOL * math.sqrt(_norm2(u) * _norm2(w)):
        raise CoincidentPointsError(f"{what}: points coincide in the projective sense")


# ---------------------------------------------------------------------------
# Point sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointSets:
    """Angles in the denominator (q) and numerator (p) of the ratio."""

    q: tuple
    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(x) for x in np.atleast_1d(self.q)))
        object.__setattr__(self, "p", tuple(float(x) for x in np.atleast_1d(self.p)))
        if len(self.q) != len(self.p):
            raise DomainError(f"need equally many q and p points, got {len(self.q)} and {len(self.p)}")

    @property
    def k(self) -> int:
        return len(self.q)

    def vectors(self, fld: CoefficientField):
        return [_vec(fld, x) for x in self.q], [_vec(fld, x) for x in self.p]

    def validate(self, fld: CoefficientField) -> None:
        """Pairwise distinctness required by the determinant formulas."""
        vq, vp = self.vectors(fld)
        for m, u in enumerate(vq):
            for n, w in enumerate(vp):
                _require_distinct(u, w, f"q[{m}] and p[{n}]")
        for vs, name in ((vq, "q"), (vp, "p")):
            for m in range(len(vs)):
                for n in range(m + 1, len(vs)):
                    _require_distinct(vs[m], vs[n], f"{name}[{m}] and {name}[{n}]")


# ---------------------------------------------------------------------------
# AIII
# ---------------------------------------------------------------------------

def _z11_vec(N: int, vq, vp) -> complex:
    return _ipow(_hdot(vq, vp) / _norm2(vq), N)


def aiii_z11(fld: CoefficientField, N, q: float, p: float) -> complex:
    """<det K(p) / det K(q)> for AIII: (v^dag(q) v(p) / v^dag(q) v(q))^N."""
    N = _resolve_N(fld, N)
    return _z11_vec(N, _vec(fld, q), _vec(fld, p))


def aiii_c1(fld: CoefficientField, N, p: float) -> complex:
    """One-point winding-density average: N v^dag(p) v'(p) / |v(p)|^2."""
    N = _resolve_N(fld, N)
    a, b = fld.v(p)
    da, db = fld.dv(p)
    v = np.array([complex(a), complex(b)])
    return N * _hdot(v, np.array([complex(da), complex(db)])) / _norm2(v)


def aiii_zkk(fld: CoefficientField, N, points: PointSets) -> complex:
    """Z_{k|k} for AIII as a ratio of two k x k Cauchy-type determinants.

    Vectors are normalized to unit length first; the positive scale factors are
    restored exactly at the end.
    """
    N = _resolve_N(fld, N)
    points.validate(fld)
    vq, vp = points.vectors(fld)
    sq = [math.sqrt(_norm2(u)) for u in vq]
    sp = [math.sqrt(_norm2(u)) for u in vp]
    uq = [u / s for u, s in zip(vq, sq)]
    up = [u / s for u, s in zip(vp, sp)]
    k = points.k
    den = np.empty((k, k), dtype=complex)
    num = np.empty((k, k), dtype=complex)
    for m in range(k):
        for n in range(k):
            # v^T(q) tau2 v(p) = -i cross(q, p)
            c = 1.0 / (-1j * _cross(uq[m], up[n]))
            den[m, n] = c
            num[m, n] = c * _z11_vec(N, uq[m], up[n])
    ratio = logdet(num) / logdet(den)
    log_scale = N * (sum(math.log(s) for s in sp) - sum(math.log(s) for s in sq))
    return complex(math.exp(ratio.log_abs + log_scale) * cmath.exp(1j * ratio.phase))


# ---------------------------------------------------------------------------
# CII kernels on raw vectors
# ---------------------------------------------------------------------------

def _k1_vec(N: int, vm, vn, gauge: str) -> complex:
    X = _cross(vn, vm)  # i v^T(p_n) tau2 v(p_m) = a_n b_m - b_n a_m
    S = _dot(vm, vn)
    if gauge == "results":
        return 2 * N * (2 * N + 1) * _pval(_even_homog(N - 1, N, S, X, 2 * N - 1))
    # Gamma-weighted truncated binomial sum carrying b(p_m) b(p_n) / (2 sqrt(pi)).
    pS, pX = _polar(S), _polar(X)
    terms = []
    for j in range(N):
        lc = math.lgamma(N + 1) + math.log(1 + 2 * N) - math.lgamma(j + 1) - math.lgamma(N - j + 0.5)
        terms.append(_pmul((lc, 1.0 + 0j), _ppow(pS, 2 * j), _ppow(pX, 2 * N - 1 - 2 * j)))
    return vm[1] * vn[1] / (2 * math.sqrt(math.pi)) * _pval(_psum(terms))


def _k2_vec(N: int, vp, vq, gauge: str) -> complex:
    D = _cross(vq, vp)  # i v^T(q) tau2 v(p)
    if D == 0:
        raise CoincidentPointsError("p and q coincide in the projective sense")
    nq = _norm2(vq)
    P = _dot(vp, vp)
    if abs(P) < NEAR_SINGULAR * _norm2(vp):
        warnings.warn("v^T(p) v(p) nearly vanishes; second kernel loses precision",
                      NearSingularWarning, stacklevel=3)
    if gauge == "results":
        Ds = _cross(np.conj(vq), vp)  # i v^dag(q) tau2 v(p)
        T = _dot(vq, vp)
        U = _hdot(vq, vp)
        if P == 0:
            raise CoincidentPointsError("v^T(p) v(p) = 0: second kernel undefined in closed form")
        inv_den = _ppow(_pmul(((2 * N + 1) * math.log(nq), 1.0 + 0j), _polar(P)), -1)
        first = _pval(_pmul(_ppow(_polar(U), 2 * N + 1), _polar(T), _ppow(_polar(D), -1), inv_den))
        second = (2 * N + 1) * _pval(_pmul(_even_homog(N, N + 1, U, Ds, 2 * N + 1), inv_den))
        return first + second
    # Literal ratio form in (a, b) with kappa-hat and its starred partner.
    ap, bp = vp
    aq, bq = vq
    den_k = bp * aq - ap * bq
    den_ks = bp * np.conj(aq) - ap * np.conj(bq)
    if den_k == 0 or den_ks == 0:
        raise CoincidentPointsError("derivation-gauge ratio undefined at this (p, q)")
    kh = (ap * aq + bp * bq) / den_k
    ks = (ap * np.conj(aq) + bp * np.conj(bq)) / den_ks
    one_plus = 1 + kh * ks
    if abs(one_plus) < NEAR_SINGULAR:
        warnings.warn("|1 + kappa-hat kappa-hat_*| below 1e-8", NearSingularWarning, stacklevel=3)
        if one_plus == 0:
            raise CoincidentPointsError("1 + kappa-hat kappa-hat_* = 0")
    pref = bp * bq / (aq * bp - bq * ap)
    base = (ap * ap + bp * bp) / den_k
    bracket = _ipow(ks, 2 * N + 1) * kh + (2 * N + 1) * skew_poly_even(N, N + 1, ks)
    return pref * _ipow(base, 2 * N) * bracket * _ipow(one_plus, -(2 * N + 1))


def _lerch_arg(vm, vn) -> float:
    nn = _norm2(vm) * _norm2(vn)
    return abs(_dot(vm, vn)) ** 2 / nn


def _k3_vec(N: int, vm, vn, gauge: str) -> complex:
    nn = _norm2(vm) * _norm2(vn)
    G = np.conj(_dot(vm, vn))  # v^dag(q_m) v*(q_n)
    x = _lerch_arg(vm, vn)
    if x >= 1.0:
        # Cauchy-Schwarz makes this reachable only at degenerate pairs.
        x = 1.0
    phi = lerch_phi(2 * N + 1, x)
    if gauge == "results":
        E = _cross(np.conj(vn), np.conj(vm))  # i v^dag(q_n) tau2 v*(q_m)
        F = np.conj(_dot(vn, vm))
        lerch_term = -_cross(vm, vn) * _pval(_pmul(_ppow(_polar(G), 2 * N + 2),
                                                   (-(2 * N + 2) * math.log(nn), 1.0 + 0j))) * phi
        poly_term = _pval(_pmul(_even_homog(N, N + 1, F, E, 2 * N + 1),
                                (-(2 * N + 1) * math.log(nn), 1.0 + 0j)))
        return lerch_term + poly_term
    am, bm = vm
    an, bn = vn
    w = np.conj(bm) * np.conj(an) - np.conj(am) * np.conj(bn)
    s = np.conj(am) * np.conj(an) + np.conj(bm) * np.conj(bn)
    if w == 0:
        raise CoincidentPointsError("derivation-gauge third kernel undefined at this pair")
    poly = _ipow(w / nn, 2 * N + 1) * skew_poly_even(N, N + 1, s / w)
    lerch = _ipow(s / nn, 2 * N + 2) * (bn * am - an * bm) * phi
    return 2 * math.pi * bm * bn * (poly - lerch)


def gauge_factor(kind: int, N: int, vx, vy) -> complex:
    """Ratio derivation / results for kernel ``kind`` in {1, 2, 3} at vectors (vx, vy)."""
    bb = vx[1] * vy[1]
    if kind == 1:
        return bb / (2 * math.pi)
    if kind == 2:
        return bb
    if kind == 3:
        return 2 * math.pi * bb
    raise DomainError("kernel kind must be 1, 2 or 3")


# ---------------------------------------------------------------------------
# CII kernels, public surface
# ---------------------------------------------------------------------------

def cii_kernel_1(fld: CoefficientField, N, p_m: float, p_n: float, gauge: str = "results") -> complex:
    """First kernel (numerator-numerator pairing); a polynomial in v(p_m), v(p_n)."""
    _check_gauge(gauge)
    return _k1_vec(_resolve_N(fld, N), _vec(fld, p_m), _vec(fld, p_n), gauge)


def cii_kernel_2(fld: CoefficientField, N, p_n: float, q_m: float, gauge: str = "results") -> complex:
    """Second kernel (numerator-denominator pairing)."""
    _check_gauge(gauge)
    vp, vq = _vec(fld, p_n), _vec(fld, q_m)
    _require_distinct(vq, vp, "q and p")
    return _k2_vec(_resolve_N(fld, N), vp, vq, gauge)


def cii_kernel_3(fld: CoefficientField, N, q_m: float, q_n: float, gauge: str = "results") -> complex:
    """Third kernel (denominator-denominator pairing), with a truncated Lerch term.

    Raises :class:`~chiral_winding.errors.BranchCutError` when the Lerch argument
    reaches 1 (coincident or conjugate-degenerate points).
    """
    _check_gauge(gauge)
    vm, vn = _vec(fld, q_m), _vec(fld, q_n)
    _require_distinct(vm, vn, "q_m and q_n")
    return _k3_vec(_resolve_N(fld, N), vm, vn, gauge)


# ---------------------------------------------------------------------------
# Pfaffian assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SkewKernelMatrix:
    """2k x 2k antisymmetric kernel matrix; rows/cols (p_1, q_1, p_2, q_2, ...)."""

    entries: np.ndarray
    gauge: str

    @property
    def k(self) -> int:
        return self.entries.shape[0] // 2


def _assemble(N: int, vq, vp, gauge: str) -> np.ndarray:
    k = len(vq)
    M = np.zeros((2 * k, 2 * k), dtype=complex)
    for m in range(k):
        for n in range(k):
            if m != n:
                M[2 * m, 2 * n] = _k1_vec(N, vp[m], vp[n], gauge)
                M[2 * m + 1, 2 * n + 1] = _k3_vec(N, vq[m], vq[n], gauge)
            M[2 * m, 2 * n + 1] = _k2_vec(N, vp[m], vq[n], gauge)
            M[2 * m + 1, 2 * n] = -_k2_vec(N, vp[n], vq[m], gauge)
    scale = np.abs(M).max()
    if scale > 0 and np.abs(M + M.T).max() > 1e-10 * scale:
        raise NotSkewSymmetricError("assembled kernel matrix is not antisymmetric")
    return M


def skew_kernel_matrix(fld: CoefficientField, N, points: PointSets, gauge: str = "results") -> SkewKernelMatrix:
    _check_gauge(gauge)
    N = _resolve_N(fld, N)
    points.validate(fld)
    vq, vp = points.vectors(fld)
    return SkewKernelMatrix(_assemble(N, vq, vp, gauge), gauge)


def cii_zkk(fld: CoefficientField, N, points: PointSets, gauge: str = "results") -> complex:
    """Z_{k|k} for CII: Pf(kernel matrix) / det[1 / (i v^T(q_m) tau2 v(p_n))].

    In the ``derivation`` gauge the denominator entries carry the matching
    b(q_m) b(p_n) factors.

    Vectors are normalized to unit length (a positive real rescaling, under
    which the average picks up an explicit power) to keep large N finite.
    """
    _check_gauge(gauge)
    N = _resolve_N(fld, N)
    points.validate(fld)
    vq, vp = points.vectors(fld)
    sq = [math.sqrt(_norm2(u)) for u in vq]
    sp = [math.sqrt(_norm2(u)) for u in vp]
    uq = [u / s for u, s in zip(vq, sq)]
    up = [u / s for u, s in zip(vp, sp)]
    M = _assemble(N, uq, up, gauge)
    k = points.k
    if gauge == "results":
        den = np.array([[1.0 / _cross(uq[m], up[n]) for n in range(k)] for m in range(k)])
    else:
        # 1 / (kappa(q_m) - kappa(p_n)) written without dividing by b.
        den = np.array([[uq[m][1] * up[n][1] / _cross(uq[m], up[n]) for n in range(k)]
                        for m in range(k)])
    pf = pfaffian(M)
    if pf == 0:
        return 0j
    ld = logdet(den)
    log_scale = 2 * N * (sum(math.log(s) for s in sp) - sum(math.log(s) for s in sq))
    return cmath.exp(cmath.log(pf) - ld.log() + log_scale)


def j_integral_closed_form(kappa1: complex, kappa2: complex, N: int) -> complex:
    """Closed form of the reference integral of the third kernel."""
    k1, k2 = complex(kappa1), complex(kappa2)
    d = (1 + abs(k1) ** 2) * (1 + abs(k2) ** 2)
    pref = ((1 + np.conj(k1) * np.conj(k2)) / d) ** (2 * N + 2)
    return complex(math.pi * pref * lerch_phi(2 * N + 1, abs(1 + k1 * k2) ** 2 / d))
