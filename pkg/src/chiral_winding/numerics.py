"""Dense complex linear algebra: log-determinants, eigenvalues, Pfaffians, solves.

Determinants are carried as :class:`LogDet` (log-magnitude plus phase) so that
products over many parameter points at large matrix size never overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError, NotSkewSymmetricError, SingularMatrixError

__all__ = [
    "PIVOT_TOL",
    "LogDet",
    "logdet",
    "slogdet_batch",
    "eigvals",
    "pfaffian",
    "solve",
    "lu_solve_trace",
]

PIVOT_TOL = 1e-300


def _wrap_phase(phase: float) -> float:
    """Map an angle to the principal range (-pi, pi]."""
    out = math.remainder(phase, 2.0 * math.pi)
    if out <= -math.pi:
        out += 2.0 * math.pi
    return out


@dataclass(frozen=True)
class LogDet:
    """Determinant stored as ``exp(log_abs) * exp(1j * phase)``."""

    log_abs: float
    phase: float

    def __post_init__(self):
        object.__setattr__(self, "phase", _wrap_phase(float(self.phase)))

    def __mul__(self, other: "LogDet") -> "LogDet":
        return LogDet(self.log_abs + other.log_abs, self.phase + other.phase)

    def __truediv__(self, other: "LogDet") -> "LogDet":
        return LogDet(self.log_abs - other.log_abs, self.phase - other.phase)

    def log(self) -> complex:
        """Principal complex logarithm of the determinant."""
        return complex(self.log_abs, self.phase)

    def value(self) -> complex:
        # Only for small, well-scaled results (ratios); may overflow otherwise.
        return complex(math.exp(self.log_abs) * complex(math.cos(self.phase), math.sin(self.phase)))


def _as_square(M) -> np.ndarray:
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def _lu(A: np.ndarray):
    # Exact zero pivots are reported by our own checks; silence scipy's warning.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(A, check_finite=False)


def logdet(M) -> LogDet:
    """Log-determinant of a square complex matrix via LU with partial pivoting.

    Triangular inputs are read off the diagonal directly, so the result is exact
    up to the logarithm itself.

    Raises
    ------
    SingularMatrixError
        If a pivot magnitude falls below ``PIVOT_TOL``.
    """
    A = _as_square(M)
    n = A.shape[0]
    if n == 0:
        return LogDet(0.0, 0.0)
    if not np.any(np.tril(A, -1)) or not np.any(np.triu(A, 1)):
        diag = np.diag(A)
        swaps = 0
    else:
        lu, piv = _lu(A)
        diag = np.diag(lu)
        swaps = int(np.count_nonzero(piv != np.arange(n)))
    mags = np.abs(diag)
    if np.any(mags < PIVOT_TOL):
        raise SingularMatrixError(f"pivot {mags.min():.3e} below {PIVOT_TOL:g}")
    log_abs = float(np.sum(np.log(mags)))
    phase = float(np.sum(np.angle(diag))) + math.pi * (swaps % 2)
    return LogDet(log_abs, phase)


def slogdet_batch(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched log-determinants for a ``(..., n, n)`` stack.

    Returns ``(log_abs, phase, ok)``; ``ok`` is False where the matrix was
    singular to working precision. Phases are not wrapped beyond what
    ``numpy.angle`` returns.
    """
    sign, log_abs = np.linalg.slogdet(stack)
    ok = np.isfinite(log_abs) & (np.abs(sign) > 0) & (log_abs > math.log(PIVOT_TOL))
    return log_abs, np.angle(sign), ok


def eigvals(M) -> np.ndarray:
    """All eigenvalues of a square complex matrix, with multiplicity, unordered."""
    A = _as_square(M)
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc


def solve(A, B) -> np.ndarray:
    """Solve ``A X = B``; raises :class:`SingularMatrixError` on tiny pivots."""
    A = _as_square(A)
    lu, piv = _lu(A)
    if np.any(np.abs(np.diag(lu)) < PIVOT_TOL):
        raise SingularMatrixError("singular system")
    return sla.lu_solve((lu, piv), np.asarray(B, dtype=complex), check_finite=False)


def lu_solve_trace(A, B) -> complex:
    """``tr(A^{-1} B)`` via one LU factorization."""
    return complex(np.trace(solve(A, B)))


def pfaffian(A, *, rtol: float = 1e-10) -> complex:
    """Pfaffian of an even-dimensional complex skew-symmetric matrix.

    Uses skew-symmetric Gaussian elimination with row/column pivoting
    (Parlett-Reid), O(n^3). Sign convention: ``pfaffian([[0, a], [-a, 0]]) == a``.
    """
    M = _as_square(A).copy()
    n = M.shape[0]
    if n % 2:
        raise NotSkewSymmetricError(f"odd dimension {n}: Pfaffian undefined")
    if n == 0:
        return 1.0 + 0.0j
    scale = np.abs(M).max()
    if np.abs(M + M.T).max() > rtol * scale:
        raise NotSkewSymmetricError("matrix is not skew-symmetric to tolerance")
    if scale == 0.0:
        return 0.0 + 0.0j

    result = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(M[k, k + 1:])))
        if kp != k + 1:
            M[[k + 1, kp], :] = M[[kp, k + 1], :]
            M[:, [k + 1, kp]] = M[:, [kp, k + 1]]
            result = -result
        pivot = M[k, k + 1]
        if pivot == 0:
            return 0.0 + 0.0j
        result *= pivot
        if k + 2 < n:
            tau = M[k, k + 2:] / pivot
            col = M[k + 2:, k + 1]
            M[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return complex(result)
