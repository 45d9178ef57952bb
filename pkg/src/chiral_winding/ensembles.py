"""Complex and quaternion Ginibre samplers, spherical spectra, eigenvalue jpdfs.

Quaternion matrices use the layout ``[[A, B], [-B*, A*]]`` with N x N complex
blocks, which satisfies ``(tau2 x 1) K* (tau2 x 1) = K`` exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln

from .errors import CoincidentPointsError, ConfigError, SingularMatrixError
from .numerics import PIVOT_TOL

__all__ = [
    "AIII",
    "CII",
    "CLASSES",
    "make_rng",
    "EnsembleSample",
    "SphericalSpectrum",
    "sample_ginibre_complex",
    "sample_ginibre_quaternion",
    "sample_ginibre_complex_batch",
    "sample_ginibre_quaternion_batch",
    "sample_pair",
    "sample_pair_batch",
    "matrix_dim",
    "tau2_kron",
    "is_quaternion_real",
    "spherical_sample",
    "spherical_upper_half",
    "log_jpdf_spherical",
    "log_norm_spherical",
]

log = logging.getLogger(__name__)

AIII = "AIII"
CII = "CII"
CLASSES = (AIII, CII)

_MAX_RESAMPLE = 1000


def check_class(cls: str) -> str:
    if cls not in CLASSES:
        raise ConfigError(f"unknown symmetry class {cls!r}; expected one of {CLASSES}")
    return cls


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for (seed, stream); streams never overlap."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream),)))


def matrix_dim(cls: str, N: int) -> int:
    """Complex dimension of K for class and size N."""
    return N if check_class(cls) == AIII else 2 * N


@dataclass(frozen=True)
class EnsembleSample:
    """One Ginibre pair (K1, K2) with its class and provenance."""

    cls: str
    K1: np.ndarray
    K2: np.ndarray
    seed_info: tuple = field(default=(None, None))

    @property
    def N(self) -> int:
        n = self.K1.shape[0]
        return n if self.cls == AIII else n // 2


@dataclass(frozen=True)
class SphericalSpectrum:
    cls: str
    eigenvalues: np.ndarray
    resampled: int = 0


def _complex_gauss(rng: np.random.Generator, shape) -> np.ndarray:
    # Unit variance: E|x|^2 = 1, real and imaginary parts each variance 1/2.
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


def sample_ginibre_complex_batch(N: int, size: int, rng: np.random.Generator) -> np.ndarray:
    if N < 1:
        raise ConfigError("N must be positive")
    return _complex_gauss(rng, (size, N, N))


def sample_ginibre_quaternion_batch(N: int, size: int, rng: np.random.Generator) -> np.ndarray:
    if N < 1:
        raise ConfigError("N must be positive")
    A = _complex_gauss(rng, (size, N, N))
    B = _complex_gauss(rng, (size, N, N))
    K = np.empty((size, 2 * N, 2 * N), dtype=complex)
    K[:, :N, :N] = A
    K[:, :N, N:] = B
    K[:, N:, :N] = -B.conj()
    K[:, N:, N:] = A.conj()
    return K


def sample_ginibre_complex(N: int, rng: np.random.Generator) -> np.ndarray:
    """N x N complex Ginibre matrix, density proportional to exp(-tr K^dag K)."""
    return sample_ginibre_complex_batch(N, 1, rng)[0]


def sample_ginibre_quaternion(N: int, rng: np.random.Generator) -> np.ndarray:
    """2N x 2N quaternion-real Ginibre matrix, density ~ exp(-tr K^dag K / 2)."""
    return sample_ginibre_quaternion_batch(N, 1, rng)[0]


def sample_pair_batch(cls: str, N: int, size: int, rng: np.random.Generator):
    """Stacks (K1, K2) of shape (size, d, d) for the given class."""
    draw = sample_ginibre_complex_batch if check_class(cls) == AIII else sample_ginibre_quaternion_batch
    return draw(N, size, rng), draw(N, size, rng)


def sample_pair(cls: str, N: int, rng: np.random.Generator, seed_info=(None, None)) -> EnsembleSample:
    K1, K2 = sample_pair_batch(cls, N, 1, rng)
    return EnsembleSample(cls, K1[0], K2[0], seed_info)


def tau2_kron(N: int) -> np.ndarray:
    """The antiunitary partner tau2 x 1_N used in the quaternion constraint."""
    t2 = np.array([[0, -1j], [1j, 0]])
    return np.kron(t2, np.eye(N))


def is_quaternion_real(K: np.ndarray, tol: float = 0.0) -> bool:
    """True iff (tau2 x 1) K* (tau2 x 1) == K (exactly by default).

    Checked blockwise so no rounding enters: A_22 = conj(A_11), A_21 = -conj(A_12).
    """
    K = np.asarray(K)
    d = K.shape[0]
    if K.ndim != 2 or d != K.shape[1] or d % 2:
        return False
    n = d // 2
    e1 = np.abs(K[n:, n:] - K[:n, :n].conj()).max(initial=0.0)
    e2 = np.abs(K[n:, :n] + K[:n, n:].conj()).max(initial=0.0)
    return max(e1, e2) <= tol


def spherical_sample(cls: str, N: int, rng: np.random.Generator) -> SphericalSpectrum:
    """Eigenvalues of Y = K1^-1 K2 for a fresh Ginibre pair; resamples singular K1."""
    resampled = 0
    for _ in range(_MAX_RESAMPLE):
        K1, K2 = sample_pair_batch(cls, N, 1, rng)
        _, ld = np.linalg.slogdet(K1[0])
        if not ld > math.log(PIVOT_TOL):
            resampled += 1
            continue
        Y = np.linalg.solve(K1[0], K2[0])
        if resampled:
            log.info("spherical_sample resampled %d singular draws", resampled)
        return SphericalSpectrum(cls, np.linalg.eigvals(Y), resampled)
    raise SingularMatrixError("could not draw a nonsingular K1")


def spherical_upper_half(eigs: np.ndarray) -> np.ndarray:
    """Upper-half-plane representatives of conjugate-paired spectra.

    Works on the last axis of shape (..., 2M): the M eigenvalues with the largest
    imaginary part, returned with nonnegative imaginary part.
    """
    eigs = np.asarray(eigs)
    M = eigs.shape[-1] // 2
    order = np.argsort(-eigs.imag, axis=-1)[..., :M]
    top = np.take_along_axis(eigs, order, axis=-1)
    return top.real + 1j * np.abs(top.imag)


def log_norm_spherical(cls: str, N: int) -> float:
    """log c for the spherical jpdf of the class at size N."""
    if check_class(cls) == AIII:
        return N * math.log(math.pi) + math.lgamma(N + 1) + sum(betaln(j, N + 1 - j) for j in range(1, N + 1))
    return N * math.log(2 * math.pi) + math.lgamma(N + 1) + sum(
        betaln(2 * j, 2 * N + 2 - 2 * j) for j in range(1, N + 1))


def _log_abs_vandermonde(x: np.ndarray) -> float:
    diffs = x[None, :] - x[:, None]
    iu = np.triu_indices(len(x), 1)
    d = np.abs(diffs[iu])
    if np.any(d == 0):
        raise CoincidentPointsError("coincident eigenvalues: jpdf vanishes")
    return float(np.sum(np.log(d)))


def log_jpdf_spherical(cls: str, N: int, z) -> float:
    """Log of the spherical-ensemble eigenvalue density.

    AIII: all N eigenvalues. CII: one representative of each conjugate pair
    (conventionally the upper-half-plane one); the density is normalized on
    C^N, where each variable may sit in either half plane.
    """
    z = np.asarray(z, dtype=complex).ravel()
    if len(z) != N:
        raise ConfigError(f"expected {N} eigenvalues, got {len(z)}")
    r2 = np.abs(z) ** 2
    if check_class(cls) == AIII:
        val = 2 * _log_abs_vandermonde(z) - (N + 1) * np.sum(np.log1p(r2))
    else:
        if np.any(z.imag == 0):
            raise CoincidentPointsError("real eigenvalue coincides with its conjugate")
        pairs = np.empty(2 * N, dtype=complex)
        pairs[0::2] = z
        pairs[1::2] = z.conj()
        val = (_log_abs_vandermonde(pairs) + np.sum(np.log(2 * np.abs(z.imag)))
               - (2 * N + 2) * np.sum(np.log1p(r2)))
    return float(val - log_norm_spherical(cls, N))
