"""Winding number density, integer winding numbers and spectral flow.

The winding number is computed twice: by tracking the phase of det K(p) with
adaptive bisection, and by integrating the density tr[K^-1 dK] / (2 pi i) over
the period. Both must round to the same integer.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .ensembles import EnsembleSample, make_rng, sample_pair
from .errors import (
    ChiralWindingError,
    RefinementExhaustedError,
    SingularMatrixError,
    WindingDisagreementError,
)
from .field import CoefficientField, eval_dK, eval_H, eval_K
from .numerics import PIVOT_TOL, eigvals, logdet, lu_solve_trace

__all__ = [
    "WindingResult",
    "WindingHistogram",
    "winding_density",
    "winding_number",
    "winding_samples",
    "SpectralFlow",
    "spectral_flow",
    "DEFAULT_GRID",
]

log = logging.getLogger(__name__)

DEFAULT_GRID = 100
MAX_DEPTH = 20
_STEP_LIMIT = math.pi / 2
_TWO_PI = 2.0 * math.pi
_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class WindingResult:
    W: int
    phase_trace: list
    refinement_depth: int
    integral_value: complex


def winding_density(fld: CoefficientField, sample: EnsembleSample, p: float) -> complex:
    """w(p) = tr[K(p)^-1 dK(p)], the log-derivative of det K(p)."""
    return lu_solve_trace(eval_K(fld, sample, p), eval_dK(fld, sample, p))


def _phase(fld, sample, p) -> float:
    return logdet(eval_K(fld, sample, p)).phase


def _stack_K(fld, sample, ps: np.ndarray, deriv: bool = False) -> np.ndarray:
    a, b = fld.dv(ps) if deriv else fld.v(ps)
    return a[:, None, None] * sample.K1[None] + b[:, None, None] * sample.K2[None]


def _grid_phases(fld, sample, ps: np.ndarray) -> np.ndarray:
    sign, logabs = np.linalg.slogdet(_stack_K(fld, sample, ps))
    if np.any(~np.isfinite(logabs)) or np.any(logabs < math.log(PIVOT_TOL)):
        bad = ps[~(logabs >= math.log(PIVOT_TOL))][0]
        raise SingularMatrixError(f"K(p) singular at p={bad:.6g}")
    return np.angle(sign)


def _wrap(x: float) -> float:
    return math.remainder(x, _TWO_PI)


def _refine_step(fld, sample, left, left_raw, right, right_raw, depth, trace):
    """Unwrapped phase increment from left to right, bisecting big steps."""
    step = _wrap(right_raw - left_raw)
    if abs(step) <= _STEP_LIMIT:
        return step, depth
    if depth >= MAX_DEPTH:
        raise RefinementExhaustedError(
            f"phase step {step:.3f} unresolved near p={left:.6g}; gap may be closed")
    mid = 0.5 * (left + right)
    mid_raw = _phase(fld, sample, mid)
    s1, d1 = _refine_step(fld, sample, left, left_raw, mid, mid_raw, depth + 1, trace)
    trace.append((float(mid), trace[-1][1] + s1))
    s2, d2 = _refine_step(fld, sample, mid, mid_raw, right, right_raw, depth + 1, trace)
    return s1 + s2, max(d1, d2)


def _track_phase(fld, sample, grid: np.ndarray):
    """Unwrapped phase along ``grid``; bisects any step larger than pi/2."""
    raw = _grid_phases(fld, sample, grid)
    trace = [(float(grid[0]), float(raw[0]))]
    depth_used = 0
    for i in range(len(grid) - 1):
        base = trace[-1][1]
        step, depth = _refine_step(fld, sample, grid[i], raw[i], grid[i + 1], raw[i + 1], 0, trace)
        depth_used = max(depth_used, depth)
        trace.append((float(grid[i + 1]), base + step))
    return trace, depth_used


def _density_integral(fld, sample, n: int, *, tol: float = 1e-9, max_points: int = 1 << 21) -> complex:
    """Periodic trapezoid of w(p)/(2 pi i), doubling until two levels agree."""
    def trap(m):
        ps = np.arange(m) * (_TWO_PI / m)
        K = _stack_K(fld, sample, ps)
        dK = _stack_K(fld, sample, ps, deriv=True)
        w = np.trace(np.linalg.solve(K, dK), axis1=-2, axis2=-1)
        scale = np.abs(w).sum() / m
        return w.sum() / m / 1j, scale

    m = n
    prev, _ = trap(m)
    while m < max_points:
        m *= 2
        cur, scale = trap(m)
        # Allow for rounding in the sum when |w| is large near a narrow gap.
        if abs(cur - prev) < max(tol, 1e3 * _EPS * scale):
            return complex(cur)
        prev = cur
    raise RefinementExhaustedError("winding density integral did not converge; gap may be nearly closed")


def winding_number(fld: CoefficientField, sample: EnsembleSample,
                   grid_points: int = DEFAULT_GRID) -> WindingResult:
    """Integer winding of det K(p) over one period, by two independent routes.

    Raises
    ------
    RefinementExhaustedError
        Phase could not be unwrapped within the bisection depth.
    WindingDisagreementError
        Phase tracking and the density integral round to different integers.
    SingularMatrixError
        K(p) singular at a grid point.
    """
    if grid_points < 16:
        raise ValueError("grid_points must be at least 16")
    grid = np.linspace(0.0, _TWO_PI, grid_points + 1)
    trace, depth = _track_phase(fld, sample, grid)
    W_phase = (trace[-1][1] - trace[0][1]) / _TWO_PI
    W = int(round(W_phase))
    integral = _density_integral(fld, sample, grid_points)
    if int(round(integral.real)) != W or abs(integral - W) >= 0.1:
        raise WindingDisagreementError(
            f"phase tracking gives {W_phase:.6f}, density integral gives {integral:.6f}")
    return WindingResult(W, trace, depth, complex(integral))


@dataclass(frozen=True)
class WindingHistogram:
    counts: dict
    n_samples: int
    rejected: int
    seed: int

    @property
    def values(self) -> list:
        return sorted(self.counts)

    def mean(self) -> float:
        n = sum(self.counts.values())
        return sum(w * c for w, c in self.counts.items()) / n if n else math.nan

    def stderr(self) -> float:
        n = sum(self.counts.values())
        if n < 2:
            return math.nan
        m = self.mean()
        var = sum(c * (w - m) ** 2 for w, c in self.counts.items()) / (n - 1)
        return math.sqrt(var / n)


def _winding_chunk(fld, seed, stream, count, grid_points):
    rng = make_rng(seed, stream)
    ws, rejected = [], 0
    for i in range(count):
        sample = sample_pair(fld.cls, fld.N, rng, seed_info=(seed, stream))
        try:
            ws.append(winding_number(fld, sample, grid_points).W)
        except (ChiralWindingError, ArithmeticError) as exc:
            rejected += 1
            log.info("winding sample %d/%d rejected: %s", stream, i, exc)
    return ws, rejected


def winding_samples(fld: CoefficientField, N: int | None, n_samples: int, seed: int, *,
                    grid_points: int = DEFAULT_GRID, chunk_size: int = 64,
                    workers: int = 1) -> WindingHistogram:
    """Histogram of W over fresh samples; failures are counted and excluded."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if N is not None and N != fld.N:
        fld = fld.with_N(N)
    sizes = [min(chunk_size, n_samples - s) for s in range(0, n_samples, chunk_size)]
    jobs = [(fld, seed, i, c, grid_points) for i, c in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda a: _winding_chunk(*a), jobs))
    else:
        results = [_winding_chunk(*a) for a in jobs]
    counts, rejected = Counter(), 0
    for ws, r in results:
        counts.update(ws)
        rejected += r
    if rejected:
        log.warning("%d of %d winding samples rejected", rejected, n_samples)
    return WindingHistogram(dict(sorted(counts.items())), n_samples, rejected, seed)


# ---------------------------------------------------------------------------
# Spectral flow
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralFlow:
    """Per-p spectra: H eigenvalues (real, sorted), K eigenvalues (tracked), det K."""

    p: np.ndarray
    h_eigs: np.ndarray
    k_eigs: np.ndarray
    det_k: np.ndarray


def _match(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    cost = np.abs(prev[:, None] - cur[None, :])
    _, cols = linear_sum_assignment(cost)
    return cur[cols]


def spectral_flow(fld: CoefficientField, sample: EnsembleSample,
                  steps: int = DEFAULT_GRID) -> SpectralFlow:
    """Spectra of H(p) and K(p) on p = 2 pi j / steps, j = 0..steps.

    K eigenvalues are reordered between steps by minimum-distance matching so
    each column follows one continuous branch.
    """
    ps = np.linspace(0.0, _TWO_PI, steps + 1)
    h_rows, k_rows, dets = [], [], []
    for p in ps:
        H = eval_H(fld, sample, p)
        h_rows.append(np.sort(np.linalg.eigvalsh(H)))
        K = eval_K(fld, sample, p)
        ev = eigvals(K)
        if k_rows:
            ev = _match(k_rows[-1], ev)
        k_rows.append(ev)
        try:
            dets.append(logdet(K).value())
        except SingularMatrixError:
            dets.append(0j)
    return SpectralFlow(ps, np.array(h_rows), np.array(k_rows), np.array(dets))
