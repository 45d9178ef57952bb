import numpy as np
import pytest

from chiral_winding.ensembles import AIII, CII, EnsembleSample, make_rng, sample_pair
from chiral_winding.errors import RefinementExhaustedError, SingularMatrixError
from chiral_winding.field import CoefficientField
from chiral_winding.winding import (
    spectral_flow,
    winding_density,
    winding_number,
    winding_samples,
)


def _identity_sample(N):
    return EnsembleSample(AIII, np.eye(N, dtype=complex), np.zeros((N, N), complex))


@pytest.mark.parametrize("N", [1, 3, 6])
def test_exp_ip_winds_N_times(N):
    f = CoefficientField(AIII, "fourier", N, {1: 1.0})
    res = winding_number(f, _identity_sample(N))
    assert res.W == N
    assert res.integral_value == pytest.approx(N, abs=1e-12)


def test_negative_and_higher_harmonics():
    f = CoefficientField(AIII, "fourier", 2, {-3: 1.0})
    assert winding_number(f, _identity_sample(2)).W == -6


def test_density_of_exp_ip():
    f = CoefficientField(AIII, "fourier", 3, {1: 1.0})
    assert winding_density(f, _identity_sample(3), 0.4) == pytest.approx(3j)


def test_parity_matches_N():
    for N in (3, 4):
        hist = winding_samples(CoefficientField(AIII, "trig", N), N, 60, seed=1)
        assert hist.rejected == 0
        assert all((w - N) % 2 == 0 for w in hist.counts)


def test_cii_integer_bins():
    hist = winding_samples(CoefficientField(CII, "trig-tr", 2), 2, 40, seed=2)
    assert sum(hist.counts.values()) + hist.rejected == 40
    assert all(isinstance(w, int) for w in hist.counts)


def test_histogram_deterministic_and_thread_independent():
    f = CoefficientField(AIII, "trig", 2)
    a = winding_samples(f, 2, 50, seed=3, chunk_size=8)
    b = winding_samples(f, 2, 50, seed=3, chunk_size=8, workers=4)
    assert a == b
    single = winding_samples(f, 2, 1, seed=3)
    assert len(single.counts) == 1 and single.n_samples == 1


def test_histogram_statistics():
    f = CoefficientField(AIII, "trig", 2)
    hist = winding_samples(f, 2, 100, seed=4)
    assert hist.stderr() > 0
    assert abs(hist.mean()) < 5 * hist.stderr() + 1e-12


def test_phase_trace_is_continuous():
    f = CoefficientField(AIII, "trig", 4)
    s = sample_pair(AIII, 4, make_rng(5))
    res = winding_number(f, s)
    phases = np.array([ph for _, ph in res.phase_trace])
    assert np.max(np.abs(np.diff(phases))) <= np.pi / 2 + 1e-12
    assert res.phase_trace[-1][0] == pytest.approx(2 * np.pi)


def test_singular_field_detected():
    f = CoefficientField(AIII, "trig", 2)
    s = EnsembleSample(AIII, np.eye(2, dtype=complex), np.eye(2, dtype=complex) * 1j)
    # K(p) = e^{ip} 1 is regular; K1 = K2 makes K(3 pi / 4) exactly singular.
    s_bad = EnsembleSample(AIII, np.eye(2, dtype=complex), np.eye(2, dtype=complex))
    assert winding_number(f, s).W == 2
    with pytest.raises((SingularMatrixError, RefinementExhaustedError)):
        winding_number(f, s_bad, grid_points=16 * 3)


def test_grid_validation():
    f = CoefficientField(AIII, "trig", 1)
    with pytest.raises(ValueError):
        winding_number(f, _identity_sample(1), grid_points=8)


def test_spectral_flow_shapes_and_symmetry():
    f = CoefficientField(AIII, "trig", 4)
    s = sample_pair(AIII, 4, make_rng(6))
    flow = spectral_flow(f, s, steps=100)
    assert flow.p.shape == (101,)
    assert flow.h_eigs.shape == (101, 8) and flow.k_eigs.shape == (101, 4)
    assert np.allclose(flow.h_eigs, -flow.h_eigs[:, ::-1], atol=1e-12)
    assert np.allclose(np.prod(flow.k_eigs, axis=1), flow.det_k, rtol=1e-9)


def test_spectral_flow_kramers_degeneracy():
    f = CoefficientField(CII, "trig-tr", 2)
    s = sample_pair(CII, 2, make_rng(7))
    flow = spectral_flow(f, s, steps=100)
    for i in (0, 50, 100):  # sin p = 0 rows
        h = flow.h_eigs[i]
        assert np.allclose(h[0::2], h[1::2], atol=1e-10)
    assert not np.allclose(flow.h_eigs[12][0::2], flow.h_eigs[12][1::2], atol=1e-6)
