import math

import numpy as np
import pytest
from scipy import integrate

from chiral_winding.ensembles import (
    AIII,
    CII,
    EnsembleSample,
    check_class,
    is_quaternion_real,
    log_jpdf_spherical,
    make_rng,
    matrix_dim,
    sample_ginibre_complex,
    sample_ginibre_quaternion,
    sample_pair,
    sample_pair_batch,
    spherical_sample,
    spherical_upper_half,
    tau2_kron,
)
from chiral_winding.errors import ConfigError


def test_check_class():
    assert check_class("AIII") == AIII
    with pytest.raises(ConfigError):
        check_class("BDI")


def test_streams_reproducible_and_distinct():
    a = make_rng(5, 0).standard_normal(4)
    assert np.array_equal(a, make_rng(5, 0).standard_normal(4))
    assert not np.array_equal(a, make_rng(5, 1).standard_normal(4))
    assert not np.array_equal(a, make_rng(6, 0).standard_normal(4))


def test_shapes_and_dims():
    rng = make_rng(0)
    assert sample_ginibre_complex(3, rng).shape == (3, 3)
    assert sample_ginibre_quaternion(3, rng).shape == (6, 6)
    assert matrix_dim(AIII, 4) == 4 and matrix_dim(CII, 4) == 8
    s = sample_pair(CII, 2, rng, seed_info=(1, 2))
    assert s.N == 2 and s.seed_info == (1, 2)
    assert sample_pair(AIII, 3, rng).N == 3


def test_quaternion_structure_exact():
    rng = make_rng(1)
    K1, K2 = sample_pair_batch(CII, 3, 5, rng)
    T = tau2_kron(3)
    for K in list(K1) + list(K2):
        assert is_quaternion_real(K)
        assert np.allclose(T @ K.conj() @ T, K, atol=1e-15)
    assert not is_quaternion_real(sample_ginibre_complex(4, rng))


def test_ginibre_variance():
    rng = make_rng(2)
    K = sample_pair_batch(AIII, 4, 20000, rng)[0]
    assert np.mean(np.abs(K) ** 2) == pytest.approx(1.0, rel=0.01)
    assert abs(np.mean(K)) < 0.01


def test_quaternion_pairs_have_kramers_degenerate_spectrum():
    s = sample_pair(CII, 3, make_rng(3))
    ev = np.linalg.eigvals(s.K1)
    # Eigenvalues come in complex-conjugate pairs.
    dist = np.abs(ev[:, None] - ev.conj()[None, :]).min(axis=1)
    assert dist.max() < 1e-10


def test_spherical_sample_and_upper_half():
    rng = make_rng(4)
    spectrum = spherical_sample(CII, 3, rng)
    assert spectrum.eigenvalues.shape == (6,)
    up = spherical_upper_half(spectrum.eigenvalues)
    assert up.shape == (3,) and np.all(up.imag >= 0)
    assert spherical_sample(AIII, 2, rng).eigenvalues.shape == (2,)


@pytest.mark.parametrize("cls", [AIII, CII])
def test_one_eigenvalue_density_normalized(cls):
    def f(r, th):
        return r * math.exp(log_jpdf_spherical(cls, 1, [r * complex(math.cos(th), math.sin(th))]))
    val, _ = integrate.dblquad(lambda r, th: f(r, th), 0, 2 * math.pi, 0, np.inf, epsabs=1e-10)
    assert val == pytest.approx(1.0, rel=1e-6)


def test_spherical_radial_law_aiii_n1():
    # N=1: z = K2/K1 has P(|z|^2 <= t) = t/(1+t).
    rng = make_rng(7)
    z = np.array([spherical_sample(AIII, 1, rng).eigenvalues[0] for _ in range(20000)])
    t = 1.0
    frac = np.mean(np.abs(z) ** 2 <= t)
    assert frac == pytest.approx(t / (1 + t), abs=0.015)


def test_ensemble_sample_is_frozen():
    s = EnsembleSample(AIII, np.eye(2), np.eye(2))
    with pytest.raises(Exception):
        s.cls = CII
