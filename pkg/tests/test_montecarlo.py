import math

import numpy as np
import pytest

from chiral_winding.analytic import PointSets, aiii_z11, cii_zkk
from chiral_winding.ensembles import AIII, CII
from chiral_winding.errors import ConfigError, RejectionRateError
from chiral_winding.field import CoefficientField
from chiral_winding.montecarlo import (
    Estimate,
    aggregate,
    mc_correlator,
    mc_det_product,
    mc_partition,
    mc_z_tilde,
)

N_SMALL = 100_000


def _fixed(K1, K2):
    def sampler(rng, size):
        return (np.broadcast_to(K1, (size,) + K1.shape).copy(),
                np.broadcast_to(K2, (size,) + K2.shape).copy())
    return sampler


def test_aggregate_mean_and_mom():
    vals = np.arange(64, dtype=complex)
    mean, se = aggregate(vals, "mean")
    assert mean == pytest.approx(31.5) and se == pytest.approx(np.std(vals, ddof=1) / 8)
    med, se2 = aggregate(vals, "mom", blocks=8)
    assert med == pytest.approx(31.5) and se2 > 0
    with pytest.raises(ConfigError):
        aggregate(vals, "trimmed")


def test_mom_resists_outlier():
    vals = np.ones(3200, dtype=complex)
    vals[0] = 1e9
    assert aggregate(vals, "mom", 32)[0] == pytest.approx(1.0)
    assert abs(aggregate(vals, "mean")[0]) > 1e5


def test_empty_products():
    f = CoefficientField(AIII, "trig", 2)
    e = mc_partition(f, 2, [], [], 10, seed=0)
    assert e.mean == 1 and e.stderr == 0


def test_numerator_only_vanishes_for_odd_N():
    f = CoefficientField(AIII, "trig", 3)
    e = mc_partition(f, 3, [], [0.7], N_SMALL, seed=1)
    assert e.method == "mean"
    assert e.zscore(0.0) < 4


def test_partition_matches_closed_form_small():
    f = CoefficientField(AIII, "trig", 2)
    e = mc_partition(f, 2, [0.5], [0.9], N_SMALL, seed=2)
    assert e.method == "mom" and e.companion.method == "mean"
    assert e.zscore(math.cos(0.4) ** 2) < 4
    assert e.companion.zscore(e.mean, e.stderr) < 4


def test_determinism_and_threading():
    f = CoefficientField(CII, "trig-tr", 1)
    a = mc_partition(f, 1, [1.1], [0.3], 50_000, seed=3, chunk_size=4096)
    b = mc_partition(f, 1, [1.1], [0.3], 50_000, seed=3, chunk_size=4096, workers=4)
    c = mc_partition(f, 1, [1.1], [0.3], 50_000, seed=4, chunk_size=4096)
    assert a == b
    assert a.mean != c.mean


def test_rejections_are_counted_and_fatal():
    f = CoefficientField(AIII, "trig", 2)
    sampler = _fixed(np.zeros((2, 2), dtype=complex), np.eye(2, dtype=complex))
    # K(0) = K1 = 0 is exactly singular for every sample.
    with pytest.raises(RejectionRateError):
        mc_partition(f, 2, [0.0], [0.1], 100, seed=0, sampler=sampler)


def test_det_product_trivial_cases():
    f = CoefficientField(CII, "trig-tr", 2)
    e = mc_det_product(f, 2, 0.0, 0.0, 20_000, seed=5)
    assert e.mean == pytest.approx(1.0, abs=1e-14) and e.stderr < 1e-12
    one = mc_det_product(f.with_N(1), 1, 0.2, 0.9, 10, seed=5)
    assert one.mean == 1 and one.stderr == 0
    x = mc_det_product(f, 2, 0.2, 0.9, 20_000, seed=6)
    y = mc_det_product(f, 2, 0.9, 0.2, 20_000, seed=6)
    assert x.mean == pytest.approx(y.mean, rel=1e-12)
    with pytest.raises(ConfigError):
        mc_det_product(CoefficientField(AIII, "trig", 2), 2, 0.1, 0.2, 10, seed=0)


def test_z_tilde_spherical_route_matches_partition():
    f = CoefficientField(CII, "trig-tr", 1)
    q, p = [0.4], [0.9]
    zt = mc_z_tilde(f, 1, 1, q, p, 200_000, seed=7)
    scale = (f.v(p[0])[1] / f.v(q[0])[1]) ** 2
    zp = mc_partition(f, 1, q, p, 200_000, seed=8)
    exact = cii_zkk(f, 1, PointSets(q, p))
    diff = abs(zt.mean * scale - zp.mean)
    assert diff < 4 * math.hypot(zt.stderr * abs(scale), zp.stderr)
    assert zt.ess > 0
    assert abs(zt.mean * scale - exact) < 4 * zt.stderr * abs(scale)


def test_z_tilde_preconditions():
    f = CoefficientField(CII, "trig-tr", 1)
    with pytest.raises(ConfigError):
        mc_z_tilde(f, 1, 2, [0.4], [], 10, seed=0)  # odd count difference
    with pytest.raises(ConfigError):
        mc_z_tilde(f, 1, 3, [0.4, 1.0], [], 10, seed=0)  # M too large
    with pytest.raises(ConfigError):
        mc_z_tilde(f, 1, 2, [0.0, 1.0], [], 10, seed=0)  # b(0) = 0


def test_correlator_deterministic_exp_ip():
    N = 3
    f = CoefficientField(AIII, "trig", N)
    sampler = _fixed(np.eye(N, dtype=complex), 1j * np.eye(N))
    e = mc_correlator(f, N, [0.7], 1000, seed=1, sampler=sampler)
    assert e.mean == pytest.approx(1j * N, abs=1e-14)
    assert e.stderr < 1e-14


def test_correlator_p_independent_for_trig():
    f = CoefficientField(AIII, "trig", 2)
    a = mc_correlator(f, 2, [0.3], N_SMALL, seed=9)
    b = mc_correlator(f, 2, [1.7], N_SMALL, seed=10)
    assert abs(a.mean - b.mean) < 4 * math.hypot(a.stderr, b.stderr)


def test_correlator_matches_derivative_generic():
    f = CoefficientField(AIII, "fourier", 2, {1: 1.0}, {0: 0.5})
    h = 1e-5
    fd = (aiii_z11(f, 2, 0.7, 0.7 + h) - aiii_z11(f, 2, 0.7, 0.7 - h)) / (2 * h)
    assert mc_correlator(f, 2, [0.7], N_SMALL, seed=11).zscore(fd) < 4


def test_estimate_zscore_and_dict():
    e = Estimate(1.0 + 0j, 0.0, 10, "mean", 0)
    assert e.zscore(1.0) == 0.0
    assert e.zscore(2.0) == math.inf
    d = Estimate(1 + 2j, 0.5, 10, "mom", 3, blocks=4).to_dict()
    assert d["mean"] == [1.0, 2.0] and d["seed"] == 3 and d["blocks"] == 4
