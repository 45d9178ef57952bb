"""Parametric matrix field K(p) = a(p) K1 + b(p) K2 and its chiral Hamiltonian.

A :class:`CoefficientField` holds the coefficient pair v(p) = (a(p), b(p)).
Built-in forms are ``trig`` (cos p, sin p) and ``trig-tr`` (cos p, i sin p);
``fourier`` takes truncated Fourier series. An optional 2x2 mixing matrix M
maps v(p) to M^T v(p), which is how symmetry transformations are applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .ensembles import CII, EnsembleSample, check_class, is_quaternion_real
from .errors import ConfigError

__all__ = [
    "FORMS",
    "CoefficientField",
    "TimeReversalReport",
    "eval_v",
    "eval_dv",
    "eval_K",
    "eval_dK",
    "eval_H",
    "chirality",
    "eval_covariance",
    "check_time_reversal",
    "mix_sample",
]

FORMS = ("trig", "trig-tr", "fourier")
_TR_POINTS = 64
_TR_TOL = 1e-12


def _parse_series(series) -> tuple:
    """Normalize a Fourier series to a sorted tuple of (harmonic, coefficient)."""
    if series is None:
        return ()
    if isinstance(series, dict):
        items = series.items()
    else:
        items = []
        for entry in series:
            if len(entry) == 3:
                items.append((entry[0], complex(entry[1], entry[2])))
            elif len(entry) == 2:
                items.append((entry[0], entry[1]))
            else:
                raise ConfigError(f"bad Fourier entry {entry!r}; use [k, re, im]")
    out = {}
    for k, c in items:
        if int(k) != float(k):
            raise ConfigError(f"Fourier harmonic must be an integer, got {k!r}")
        out[int(k)] = out.get(int(k), 0j) + complex(c)
    return tuple(sorted((k, c) for k, c in out.items() if c != 0))


def _series_eval(series: tuple, p: np.ndarray, deriv: bool) -> np.ndarray:
    out = np.zeros(np.shape(p), dtype=complex)
    for k, c in series:
        term = c * np.exp(1j * k * p)
        out = out + (1j * k * term if deriv else term)
    return out


@dataclass(frozen=True)
class CoefficientField:
    """Coefficient functions of the field, immutable.

    ``mix`` is a 2x2 matrix M (row-major tuple) such that the evaluated vector
    is M^T v_base(p).
    """

    cls: str
    form: str = "trig"
    N: int = 1
    fourier_a: tuple = ()
    fourier_b: tuple = ()
    time_reversal: bool = False
    mix: tuple = field(default=(1, 0, 0, 1))

    def __post_init__(self):
        check_class(self.cls)
        if self.form not in FORMS:
            raise ConfigError(f"unknown field form {self.form!r}; expected one of {FORMS}")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "fourier_a", _parse_series(self.fourier_a))
        object.__setattr__(self, "fourier_b", _parse_series(self.fourier_b))
        object.__setattr__(self, "mix", tuple(complex(x) for x in np.ravel(self.mix)))
        if len(self.mix) != 4:
            raise ConfigError("mix must be a 2x2 matrix")
        if self.form == "fourier" and not (self.fourier_a or self.fourier_b):
            raise ConfigError("fourier form needs at least one nonzero coefficient")
        if self.time_reversal:
            if self.cls != CII:
                raise ConfigError("time_reversal flag applies to class CII only")
            if not _tr_condition(self)[0]:
                raise ConfigError("field violates v*(p) = v(-p) but time_reversal is set")

    # -- evaluation --------------------------------------------------------
    def _base(self, p, deriv: bool):
        p = np.asarray(p, dtype=float)
        if self.form == "trig":
            if deriv:
                return -np.sin(p) + 0j, np.cos(p) + 0j
            return np.cos(p) + 0j, np.sin(p) + 0j
        if self.form == "trig-tr":
            if deriv:
                return -np.sin(p) + 0j, 1j * np.cos(p)
            return np.cos(p) + 0j, 1j * np.sin(p)
        return _series_eval(self.fourier_a, p, deriv), _series_eval(self.fourier_b, p, deriv)

    def _apply_mix(self, a, b):
        m00, m01, m10, m11 = self.mix
        return m00 * a + m10 * b, m01 * a + m11 * b

    def v(self, p):
        """(a(p), b(p)); vectorized over p."""
        return self._apply_mix(*self._base(p, False))

    def dv(self, p):
        """(a'(p), b'(p)), analytic."""
        return self._apply_mix(*self._base(p, True))

    def vec(self, p) -> np.ndarray:
        """v(p) as an array of shape (..., 2)."""
        a, b = self.v(p)
        return np.stack([np.asarray(a, complex), np.asarray(b, complex)], axis=-1)

    # -- transformations ---------------------------------------------------
    def transformed(self, M) -> "CoefficientField":
        """Field with v(p) replaced by M^T v(p)."""
        M = np.asarray(M, dtype=complex).reshape(2, 2)
        cur = np.array(self.mix).reshape(2, 2)
        return replace(self, mix=tuple((cur @ M).ravel()), time_reversal=False)

    def with_N(self, N: int) -> "CoefficientField":
        return replace(self, N=N)

    def to_fourier(self) -> "CoefficientField":
        """Equivalent ``fourier``-form field (mixing folded in)."""
        if self.form == "trig":
            fa, fb = {1: 0.5, -1: 0.5}, {1: -0.5j, -1: 0.5j}
        elif self.form == "trig-tr":
            fa, fb = {1: 0.5, -1: 0.5}, {1: 0.5, -1: -0.5}
        else:
            fa, fb = dict(self.fourier_a), dict(self.fourier_b)
        m00, m01, m10, m11 = self.mix
        keys = set(fa) | set(fb)
        na = {k: m00 * fa.get(k, 0) + m10 * fb.get(k, 0) for k in keys}
        nb = {k: m01 * fa.get(k, 0) + m11 * fb.get(k, 0) for k in keys}
        return CoefficientField(self.cls, "fourier", self.N, na, nb)

    # -- config round trip -------------------------------------------------
    def to_config(self) -> dict:
        cfg = {"class": self.cls, "form": self.form, "N": self.N}
        if self.form == "fourier":
            cfg["fourier_a"] = [[k, c.real, c.imag] for k, c in self.fourier_a]
            cfg["fourier_b"] = [[k, c.real, c.imag] for k, c in self.fourier_b]
        if self.time_reversal:
            cfg["time_reversal"] = True
        if self.mix != (1, 0, 0, 1):
            cfg["mix"] = [[c.real, c.imag] for c in self.mix]
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "CoefficientField":
        try:
            mix = cfg.get("mix")
            if mix is not None:
                mix = [complex(re, im) for re, im in mix]
            return cls(
                cls=cfg["class"],
                form=cfg.get("form", "trig"),
                N=cfg.get("N", 1),
                fourier_a=cfg.get("fourier_a"),
                fourier_b=cfg.get("fourier_b"),
                time_reversal=bool(cfg.get("time_reversal", False)),
                mix=mix if mix is not None else (1, 0, 0, 1),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid field config: {exc}") from exc


# ---------------------------------------------------------------------------

def eval_v(fld: CoefficientField, p):
    a, b = fld.v(p)
    return (complex(a), complex(b)) if np.ndim(p) == 0 else (a, b)


def eval_dv(fld: CoefficientField, p):
    a, b = fld.dv(p)
    return (complex(a), complex(b)) if np.ndim(p) == 0 else (a, b)


def _check_sample(fld: CoefficientField, sample: EnsembleSample):
    if sample.cls != fld.cls:
        raise ConfigError(f"sample class {sample.cls} does not match field class {fld.cls}")
    if sample.K1.shape != sample.K2.shape:
        raise ValueError("K1 and K2 have different shapes")


def eval_K(fld: CoefficientField, sample: EnsembleSample, p) -> np.ndarray:
    """K(p) = a(p) K1 + b(p) K2."""
    _check_sample(fld, sample)
    a, b = eval_v(fld, p)
    return a * sample.K1 + b * sample.K2


def eval_dK(fld: CoefficientField, sample: EnsembleSample, p) -> np.ndarray:
    """dK/dp = a'(p) K1 + b'(p) K2."""
    _check_sample(fld, sample)
    a, b = eval_dv(fld, p)
    return a * sample.K1 + b * sample.K2


def eval_H(fld: CoefficientField, sample: EnsembleSample, p) -> np.ndarray:
    """Chiral Hamiltonian [[0, K], [K^dag, 0]]."""
    K = eval_K(fld, sample, p)
    n = K.shape[0]
    H = np.zeros((2 * n, 2 * n), dtype=complex)
    H[:n, n:] = K
    H[n:, :n] = K.conj().T
    return H


def chirality(n: int) -> np.ndarray:
    """Chirality operator diag(1_n, -1_n)."""
    return np.diag(np.concatenate([np.ones(n), -np.ones(n)])).astype(complex)


def eval_covariance(fld: CoefficientField, p, q) -> complex:
    """S(p, q) = v^dag(p) v(q)."""
    ap, bp = eval_v(fld, p)
    aq, bq = eval_v(fld, q)
    return np.conj(ap) * aq + np.conj(bp) * bq


@dataclass(frozen=True)
class TimeReversalReport:
    ok: bool
    max_deviation: float
    k0_quaternion_real: bool | None = None


def _tr_condition(fld: CoefficientField):
    p = np.linspace(0.0, 2 * np.pi, _TR_POINTS, endpoint=False)
    a, b = fld.v(p)
    am, bm = fld.v(-p)
    dev = float(max(np.abs(np.conj(a) - am).max(), np.abs(np.conj(b) - bm).max()))
    return dev <= _TR_TOL, dev


def check_time_reversal(fld: CoefficientField, sample: EnsembleSample | None = None) -> TimeReversalReport:
    """Check v*(p) = v(-p) on 64 equispaced points; optionally that K(0) is quaternion-real."""
    if fld.cls != CII:
        raise ConfigError("time-reversal check applies to class CII")
    ok, dev = _tr_condition(fld)
    k0 = None
    if sample is not None:
        k0 = is_quaternion_real(eval_K(fld, sample, 0.0), tol=1e-14 * max(1.0, np.abs(sample.K1).max()))
    return TimeReversalReport(ok, dev, k0)


def mix_sample(sample: EnsembleSample, U) -> EnsembleSample:
    """Matrices (K1', K2') with K1' = sum_j (U^-1)_1j K_j, K2' likewise.

    Paired with ``field.transformed(U)`` this leaves K(p) unchanged.
    """
    Uinv = np.linalg.inv(np.asarray(U, dtype=complex).reshape(2, 2))
    K1 = Uinv[0, 0] * sample.K1 + Uinv[0, 1] * sample.K2
    K2 = Uinv[1, 0] * sample.K1 + Uinv[1, 1] * sample.K2
    return EnsembleSample(sample.cls, K1, K2, sample.seed_info)

