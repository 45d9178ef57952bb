import math

import numpy as np
import pytest

from chiral_winding.errors import ConvergenceError, NotSkewSymmetricError, SingularMatrixError
from chiral_winding.numerics import (
    LogDet,
    eigvals,
    logdet,
    lu_solve_trace,
    pfaffian,
    slogdet_batch,
    solve,
)


def _random(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def _skew(rng, n):
    A = _random(rng, n)
    return A - A.T


def test_logdet_matches_numpy(rng):
    for n in (1, 2, 5, 12):
        A = _random(rng, n)
        ld = logdet(A)
        assert abs(ld.value() - np.linalg.det(A)) <= 1e-12 * abs(np.linalg.det(A))


def test_logdet_diagonal_and_triangular_exact():
    ld = logdet(np.diag([2.0, -3.0, 1j]))
    assert ld.log_abs == pytest.approx(math.log(6.0), abs=1e-15)
    assert ld.phase == pytest.approx(-math.pi / 2, abs=1e-15)
    assert logdet(np.array([[1.0, 5.0], [0.0, 4.0]])).value() == pytest.approx(4.0, abs=1e-15)


def test_logdet_permutation_sign():
    assert logdet(np.array([[0.0, 1.0], [1.0, 0.0]])).value() == pytest.approx(-1.0, abs=1e-15)


def test_logdet_survives_overflow_scale():
    A = 1e200 * np.eye(4)
    ld = logdet(A)
    assert ld.log_abs == pytest.approx(4 * 200 * math.log(10), rel=1e-14)


def test_logdet_empty_and_singular():
    assert logdet(np.zeros((0, 0))).value() == 1.0
    with pytest.raises(SingularMatrixError):
        logdet(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_logdet_rejects_bad_shapes():
    with pytest.raises(ValueError):
        logdet(np.ones((2, 3)))
    with pytest.raises(ValueError):
        logdet(np.array([[np.nan]]))


def test_logdet_arithmetic_and_phase_range():
    a, b = LogDet(1.0, 3.0), LogDet(0.5, 2.0)
    prod = a * b
    assert prod.log_abs == 1.5 and -math.pi < prod.phase <= math.pi
    assert prod.phase == pytest.approx(5.0 - 2 * math.pi)
    ratio = a / b
    assert ratio.value() == pytest.approx(a.value() / b.value(), rel=1e-14)
    assert LogDet(0.0, -math.pi).phase == pytest.approx(math.pi)
    assert a.log() == complex(1.0, 3.0)


def test_slogdet_batch_flags_singular(rng):
    stack = np.stack([_random(rng, 3), np.zeros((3, 3))])
    log_abs, phase, ok = slogdet_batch(stack)
    assert ok.tolist() == [True, False]
    assert np.exp(log_abs[0] + 1j * phase[0]) == pytest.approx(np.linalg.det(stack[0]), rel=1e-12)


def test_solve_and_trace(rng):
    A, B = _random(rng, 4), _random(rng, 4)
    assert np.allclose(A @ solve(A, B), B, atol=1e-12)
    assert lu_solve_trace(A, B) == pytest.approx(np.trace(np.linalg.solve(A, B)), rel=1e-12)
    with pytest.raises(SingularMatrixError):
        solve(np.zeros((2, 2)), np.eye(2))


def test_eigvals_multiset(rng):
    A = _random(rng, 5)
    ev = eigvals(A)
    assert np.prod(ev) == pytest.approx(np.linalg.det(A), rel=1e-10)
    assert np.sum(ev) == pytest.approx(np.trace(A), rel=1e-10)


def test_eigvals_wraps_lapack_failure(monkeypatch):
    def boom(_):
        raise np.linalg.LinAlgError("no convergence")
    monkeypatch.setattr(np.linalg, "eigvals", boom)
    with pytest.raises(ConvergenceError):
        eigvals(np.eye(2))


def test_pfaffian_small_cases():
    assert pfaffian(np.zeros((0, 0))) == 1.0
    assert pfaffian(np.array([[0, 2.5j], [-2.5j, 0]])) == 2.5j
    a, b, c, d, e, f = 1.0, 2.0, 3.0, 4.0, 5.0, 6.0
    A = np.array([[0, a, b, c], [-a, 0, d, e], [-b, -d, 0, f], [-c, -e, -f, 0]])
    assert pfaffian(A) == pytest.approx(a * f - b * e + c * d, abs=1e-13)


def test_pfaffian_squares_to_determinant(rng):
    for n in (2, 4, 8, 16):
        A = _skew(rng, n)
        pf = pfaffian(A)
        det = np.linalg.det(A)
        assert abs(pf * pf - det) <= 1e-10 * abs(det)


def test_pfaffian_block_diagonal_is_product(rng):
    A, B = _skew(rng, 4), _skew(rng, 2)
    M = np.zeros((6, 6), dtype=complex)
    M[:4, :4], M[4:, 4:] = A, B
    assert pfaffian(M) == pytest.approx(pfaffian(A) * pfaffian(B), rel=1e-12)


def test_pfaffian_transformation_rule(rng):
    # Pf(B A B^T) = det(B) Pf(A), independent of any determinant square root.
    A, B = _skew(rng, 6), _random(rng, 6)
    assert pfaffian(B @ A @ B.T) == pytest.approx(np.linalg.det(B) * pfaffian(A), rel=1e-10)


def test_pfaffian_rejects_bad_input(rng):
    with pytest.raises(NotSkewSymmetricError):
        pfaffian(np.zeros((3, 3)))
    with pytest.raises(NotSkewSymmetricError):
        pfaffian(_random(rng, 4))
    assert pfaffian(np.zeros((4, 4))) == 0
