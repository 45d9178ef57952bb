import math

import numpy as np
import pytest

from chiral_winding.errors import BudgetExceededError, DomainError
from chiral_winding.oracles import heine_q2_check, quad_J, quad_plane, quad_skew_product


def test_quad_plane_gaussian():
    res = quad_plane(lambda z: np.exp(-np.abs(z) ** 2))
    assert res.value == pytest.approx(math.pi, rel=1e-10)
    assert res.est_error >= 0 and res.evaluations > 0


def test_quad_plane_simple_pole():
    # int exp(-|z|^2) / |z - c| over C with an integrable singularity at c.
    c = 0.3 + 0.1j
    res = quad_plane(lambda z: np.exp(-np.abs(z) ** 2) / np.abs(z - c), poles=[c])
    ref = quad_plane(lambda z: np.exp(-np.abs(z + c) ** 2) / np.abs(z), poles=[0.0])
    assert res.value == pytest.approx(ref.value, rel=1e-8)


def test_quad_J_matches_closed_form():
    res = quad_J(0.3 + 0.2j, -0.5 + 0.7j, 1)
    assert abs(res.value - res.target) <= 1e-6 * abs(res.target)
    assert res.est_error <= 1e-7 * abs(res.value)


def test_quad_J_swap_and_conjugation():
    a = quad_J(1.5j, 0.4j, 1).value
    assert a == pytest.approx(quad_J(0.4j, 1.5j, 1).value, rel=1e-6)
    # Conjugating both arguments conjugates the integral.
    assert np.conj(a) == pytest.approx(quad_J(-1.5j, -0.4j, 1).value, rel=1e-6)


def test_quad_J_convergence_history():
    res = quad_J(0.3 + 0.2j, -0.5 + 0.7j, 1)
    errs = [e for _, e in res.history]
    # Each quadrupling of the evaluation count at least halves the estimate
    # once the asymptotic regime is reached.
    assert all(b <= 0.5 * a for a, b in zip(errs[1:], errs[2:]))


def test_quad_J_preconditions():
    with pytest.raises(DomainError):
        quad_J(0.1, 0.1, 1)
    with pytest.raises(DomainError):
        quad_J(0.1, 0.2, 5)
    with pytest.raises(BudgetExceededError):
        quad_J(0.3, -0.2j, 1, max_evaluations=1000)


def test_quad_skew_product():
    assert quad_skew_product(1, 2, 2).value == pytest.approx(math.pi / 20, rel=1e-8)
    assert quad_skew_product(2, 2, 2).value == 0
    assert quad_skew_product(3, 2, 2).value == pytest.approx(-quad_skew_product(2, 3, 2).value, rel=1e-12)
    with pytest.raises(DomainError):
        quad_skew_product(6, 5, 2)


def test_heine_examples():
    a = heine_q2_check(2, 0.0)
    b = heine_q2_check(2, 1.0)
    assert a.value == pytest.approx(2 / 3, rel=1e-6)
    assert b.value == pytest.approx(5 / 3, rel=1e-6)
    assert abs(a.value.imag) < 1e-12 and abs(b.value.imag) < 1e-12
    with pytest.raises(DomainError):
        heine_q2_check(5, 0.0)
