"""Monte Carlo estimators over Ginibre pairs and spherical spectra.

Samples are drawn in fixed-size chunks, each with its own random stream
derived from (seed, chunk index), and merged in chunk order, so results are
bit-identical for serial and threaded execution. Per-sample quantities are
carried as complex logarithms and exponentiated only after subtracting the
largest log-magnitude.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import betaln

from .ensembles import CII, log_norm_spherical, make_rng, sample_ginibre_quaternion_batch, sample_pair_batch
from .errors import ConfigError, LowEffectiveSampleSizeWarning, RejectionRateError
from .field import CoefficientField
from .numerics import PIVOT_TOL

__all__ = [
    "METHODS",
    "Estimate",
    "aggregate",
    "mc_partition",
    "mc_det_product",
    "mc_z_tilde",
    "mc_correlator",
]

log = logging.getLogger(__name__)

METHODS = ("mean", "mom")
DEFAULT_BLOCKS = 32
DEFAULT_CHUNK = 1 << 15
MAX_REJECTION_RATE = 1e-3
_LOG_PIVOT = math.log(PIVOT_TOL)

Sampler = Callable[[np.random.Generator, int], tuple]


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate of a complex expectation.

    ``method`` is ``mean`` (sample mean) or ``mom`` (median of block means).
    ``companion`` holds the same samples aggregated with the other method.
    """

    mean: complex
    stderr: float
    n_samples: int
    method: str
    seed: int
    blocks: int | None = None
    rejected: int = 0
    ess: float | None = None
    companion: "Estimate | None" = None

    def zscore(self, target: complex, other_stderr: float = 0.0) -> float:
        """|mean - target| in units of the (combined) standard error."""
        se = math.hypot(self.stderr, other_stderr)
        diff = abs(self.mean - target)
        if se == 0.0:
            floor = 1e-12 * max(1.0, abs(target))
            return 0.0 if diff <= floor else math.inf
        return diff / se

    def to_dict(self) -> dict:
        out = {
            "mean": [self.mean.real, self.mean.imag],
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "method": self.method,
            "seed": self.seed,
            "blocks": self.blocks,
            "rejected": self.rejected,
        }
        if self.ess is not None:
            out["ess"] = self.ess
        if self.companion is not None:
            out["companion"] = self.companion.to_dict()
        return out


def _complex_std(x: np.ndarray) -> float:
    if len(x) < 2:
        return 0.0
    return float(math.sqrt(np.var(x.real, ddof=1) + np.var(x.imag, ddof=1)))


def aggregate(values: np.ndarray, method: str = "mean", blocks: int = DEFAULT_BLOCKS) -> tuple[complex, float]:
    """(mean, stderr) of complex samples.

    ``mom`` splits the samples into ``blocks`` contiguous blocks and takes the
    componentwise median of the block means; its standard error uses the
    asymptotic efficiency factor sqrt(pi/2) of the median.
    """
    values = np.asarray(values, dtype=complex)
    n = len(values)
    if n == 0:
        raise ValueError("no samples to aggregate")
    if method == "mean":
        return complex(values.mean()), _complex_std(values) / math.sqrt(n)
    if method != "mom":
        raise ConfigError(f"unknown aggregation method {method!r}; expected one of {METHODS}")
    b = min(blocks, n)
    means = np.array([chunk.mean() for chunk in np.array_split(values, b)])
    med = complex(np.median(means.real), np.median(means.imag))
    return med, math.sqrt(math.pi / 2) * _complex_std(means) / math.sqrt(b)


def _check_rejections(n_total: int, rejected: int) -> None:
    if n_total and rejected / n_total > MAX_REJECTION_RATE:
        raise RejectionRateError(f"{rejected} of {n_total} samples rejected (> {MAX_REJECTION_RATE:.1%})")


def _estimate_from_values(vals: np.ndarray, scale: float, n_total: int, rejected: int, method: str,
                          seed: int, blocks: int, ess: float | None = None) -> Estimate:
    _check_rejections(n_total, rejected)
    results = {}
    for m in METHODS:
        mean, se = aggregate(vals, m, blocks)
        results[m] = Estimate(mean * scale, se * scale, n_total, m, seed,
                              blocks if m == "mom" else None, rejected, ess)
    other = "mean" if method == "mom" else "mom"
    return replace(results[method], companion=results[other])


def _estimate_from_logs(logs: np.ndarray, n_total: int, rejected: int, method: str, seed: int,
                        blocks: int, ess: float | None = None) -> Estimate:
    _check_rejections(n_total, rejected)
    # Exponentiate only after removing the largest log-magnitude.
    shift = float(np.max(logs.real))
    return _estimate_from_values(np.exp(logs - shift), math.exp(shift), n_total, rejected,
                                 method, seed, blocks, ess)


def _run_chunks(job: Callable[[int, int], tuple], n_samples: int, chunk_size: int, workers: int):
    sizes = [min(chunk_size, n_samples - s) for s in range(0, n_samples, chunk_size)]
    args = list(enumerate(sizes))
    if workers > 1 and len(args) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: job(*a), args))
    else:
        parts = [job(*a) for a in args]
    logs = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, complex)
    rejected = sum(p[1] for p in parts)
    extra = [p[2:] for p in parts]
    return logs, rejected, extra


def _log_dets(stack: np.ndarray):
    sign, logabs = np.linalg.slogdet(stack)
    ok = np.isfinite(logabs) & (logabs > _LOG_PIVOT)
    # Singular entries get a placeholder 0; callers drop them via ``ok``.
    return np.where(ok, logabs + 1j * np.angle(sign), 0.0), ok


def _default_method(has_denominator: bool, method: str | None) -> str:
    if method is None:
        return "mom" if has_denominator else "mean"
    if method not in METHODS:
        raise ConfigError(f"unknown aggregation method {method!r}; expected one of {METHODS}")
    return method


def _field_N(fld: CoefficientField, N) -> int:
    return fld.N if N is None else int(N)


def mc_partition(fld: CoefficientField, N, q: Sequence[float], p: Sequence[float], n_samples: int,
                 seed: int, method: str | None = None, *, blocks: int = DEFAULT_BLOCKS,
                 chunk_size: int = DEFAULT_CHUNK, workers: int = 1,
                 sampler: Sampler | None = None) -> Estimate:
    """Estimate <prod_j det K(p_j) / prod_j det K(q_j)> over Ginibre pairs.

    ``q`` and ``p`` may have different lengths. Samples where any K(q_j) or
    K(p_j) is singular are rejected; more than 0.1% rejections is an error.
    """
    N = _field_N(fld, N)
    q = [float(x) for x in q]
    p = [float(x) for x in p]
    method = _default_method(bool(q), method)
    if not q and not p:
        return Estimate(1.0 + 0j, 0.0, n_samples, method, seed)
    if n_samples < 1:
        raise ConfigError("n_samples must be positive")
    vq = [fld.v(x) for x in q]
    vp = [fld.v(x) for x in p]

    def job(idx, size):
        rng = make_rng(seed, idx)
        K1, K2 = sampler(rng, size) if sampler else sample_pair_batch(fld.cls, N, size, rng)
        total = np.zeros(size, dtype=complex)
        ok = np.ones(size, dtype=bool)
        for (a, b), sgn in [(v, 1) for v in vp] + [(v, -1) for v in vq]:
            ld, good = _log_dets(a * K1 + b * K2)
            total += sgn * ld
            ok &= good
        return total[ok], int(size - ok.sum())

    logs, rejected, _ = _run_chunks(job, n_samples, chunk_size, workers)
    return _estimate_from_logs(logs, n_samples, rejected, method, seed, blocks)


def mc_det_product(fld: CoefficientField, N, p_m: float, p_n: float, n_samples: int, seed: int, *,
                   chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> Estimate:
    """Estimate <det K(p_m) det K(p_n)> / <det K1^2> over quaternion pairs of size N-1.

    Numerator and denominator use the same samples; the standard error of the
    ratio comes from the linearized residuals x_i - R y_i.
    """
    if fld.cls != CII:
        raise ConfigError("mc_det_product applies to class CII")
    N = _field_N(fld, N)
    n_q = N - 1
    if n_q == 0:
        # 0 x 0 matrices: both averages are exactly one.
        return Estimate(1.0 + 0j, 0.0, n_samples, "mean", seed)
    am, bm = fld.v(p_m)
    an, bn = fld.v(p_n)

    def job(idx, size):
        rng = make_rng(seed, idx)
        K1 = sample_ginibre_quaternion_batch(n_q, size, rng)
        K2 = sample_ginibre_quaternion_batch(n_q, size, rng)
        # Singular matrices contribute an exact zero determinant.
        lm, okm = _log_dets(am * K1 + bm * K2)
        ln, okn = _log_dets(an * K1 + bn * K2)
        l1, ok1 = _log_dets(K1)
        x = np.where(okm & okn, np.exp(lm + ln), 0.0)
        y = np.where(ok1, np.exp(2 * l1), 0.0)
        return x, 0, y

    xs, _, extra = _run_chunks(job, n_samples, chunk_size, workers)
    ys = np.concatenate([e[0] for e in extra])
    R = xs.mean() / ys.mean()
    resid = (xs - R * ys) / ys.mean()
    return Estimate(complex(R), _complex_std(resid) / math.sqrt(len(xs)), n_samples, "mean", seed)


def _log_norm_z_tilde(N: int, M: int, shift: int) -> float:
    Mp = M + shift
    return Mp * math.log(2 * math.pi) + math.lgamma(M + 1) + sum(
        betaln(2 * j, 2 * N + 2 - 2 * j) for j in range(1, Mp + 1))


def mc_z_tilde(fld: CoefficientField, N, M: int, q: Sequence[float], p: Sequence[float],
               n_samples: int, seed: int, method: str | None = None, *, blocks: int = DEFAULT_BLOCKS,
               chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> Estimate:
    """Reweighted spherical-ensemble estimate of the M-variable weighted integral

        (1/norm) int d[z] Delta(z, z*) prod_r g(z_r) prod_j prod_p (kappa_p + z_j)(kappa_p + z_j*)
                                                  / prod_q (kappa_q + z_j)(kappa_q + z_j*)

    with g the weight of the size-N quaternion spherical ensemble and
    kappa = a / b. Samples come from the size-M ensemble and are reweighted by
    prod_j (1 + |z_j|^2)^(2(M - N)) times the ratio of normalizations.
    """
    if fld.cls != CII:
        raise ConfigError("mc_z_tilde applies to class CII")
    N = _field_N(fld, N)
    q = [float(x) for x in q]
    p = [float(x) for x in p]
    diff = len(p) - len(q)
    if diff % 2:
        raise ConfigError("numerator and denominator counts must differ by an even number")
    shift = diff // 2
    if M < 1 or not 0 <= M + shift < N + 1:
        raise ConfigError(f"need 0 <= M + (l-k)/2 < N + 1, got M={M}, N={N}, l-k={diff}")
    method = _default_method(bool(q), method)

    def kappa(x):
        a, b = fld.v(x)
        if abs(b) < 1e-12 * max(1.0, abs(a)):
            raise ConfigError(f"b(p) vanishes at p={x}; reweighting needs finite a/b")
        return complex(a / b)

    kq = np.array([kappa(x) for x in q])
    kp = np.array([kappa(x) for x in p])
    log_const = log_norm_spherical(CII, M) - _log_norm_z_tilde(N, M, shift)

    def job(idx, size):
        rng = make_rng(seed, idx)
        K1, K2 = sample_pair_batch(CII, M, size, rng)
        _, ok = _log_dets(K1)
        Y = np.linalg.solve(K1[ok], K2[ok])
        eig = np.linalg.eigvals(Y)
        order = np.argsort(-eig.imag, axis=-1)[:, :M]
        z = np.take_along_axis(eig, order, axis=-1)
        lw = 2 * (M - N) * np.sum(np.log1p(np.abs(z) ** 2), axis=-1)
        lf = np.zeros(len(z), dtype=complex)
        for k_ in kp:
            lf += np.sum(np.log(k_ + z) + np.log(k_ + z.conj()), axis=-1)
        for k_ in kq:
            lf -= np.sum(np.log(k_ + z) + np.log(k_ + z.conj()), axis=-1)
        good = np.isfinite(lf) & np.isfinite(lw)
        return lf[good] + lw[good] + log_const, int(size - good.sum())

    logs, rejected, _ = _run_chunks(job, n_samples, chunk_size, workers)
    # Effective sample size of the estimator's magnitudes |f w|: the reweighting
    # factor alone grows at infinity where f decays, so it would understate ESS.
    _check_rejections(n_samples, rejected)
    w = np.exp(logs.real - logs.real.max())
    ess = float(w.sum() ** 2 / np.sum(w * w))
    if ess < 0.01 * n_samples:
        warnings.warn(f"reweighting effective sample size {ess:.0f} below 1% of {n_samples}",
                      LowEffectiveSampleSizeWarning, stacklevel=2)
    return _estimate_from_logs(logs, n_samples, rejected, method, seed, blocks, ess)


def mc_correlator(fld: CoefficientField, N, p: Sequence[float], n_samples: int, seed: int,
                  method: str | None = None, *, blocks: int = DEFAULT_BLOCKS,
                  chunk_size: int = DEFAULT_CHUNK, workers: int = 1,
                  sampler: Sampler | None = None) -> Estimate:
    """Estimate <prod_j w(p_j)> with w(p) = tr[K(p)^-1 dK(p)].

    ``sampler(rng, size)`` may replace the Ginibre draw, e.g. with fixed matrices.
    """
    N = _field_N(fld, N)
    p = [float(x) for x in p]
    method = _default_method(True, method)
    if not p:
        return Estimate(1.0 + 0j, 0.0, n_samples, method, seed)
    v = [(fld.v(x), fld.dv(x)) for x in p]

    def job(idx, size):
        rng = make_rng(seed, idx)
        K1, K2 = sampler(rng, size) if sampler else sample_pair_batch(fld.cls, N, size, rng)
        prod = np.ones(size, dtype=complex)
        ok = np.ones(size, dtype=bool)
        for (a, b), (da, db) in v:
            K = a * K1 + b * K2
            _, good = _log_dets(K)
            ok &= good
            K = np.where(good[:, None, None], K, np.eye(K.shape[-1]))
            prod *= np.trace(np.linalg.solve(K, da * K1 + db * K2), axis1=-2, axis2=-1)
        return prod[ok], int(size - ok.sum())

    vals, rejected, _ = _run_chunks(job, n_samples, chunk_size, workers)
    # Densities are ratios of polynomials of modest size; no log-space needed.
    return _estimate_from_values(vals, 1.0, n_samples, rejected, method, seed, blocks)
