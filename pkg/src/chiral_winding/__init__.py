"""Chiral random matrix fields: winding numbers, determinant-ratio averages and checks."""

__version__ = "0.1.0"

from .analytic import (
    PointSets,
    SkewKernelMatrix,
    aiii_c1,
    aiii_z11,
    aiii_zkk,
    cii_kernel_1,
    cii_kernel_2,
    cii_kernel_3,
    cii_zkk,
    gauge_factor,
    j_integral_closed_form,
    skew_kernel_matrix,
)
from .ensembles import AIII, CII, EnsembleSample, make_rng, sample_pair, spherical_sample
from .field import CoefficientField, check_time_reversal, eval_dK, eval_H, eval_K
from .montecarlo import Estimate, mc_correlator, mc_det_product, mc_partition, mc_z_tilde
from .numerics import LogDet, logdet, pfaffian
from .specfun import lerch_phi, skew_norm, skew_poly_even, skew_poly_odd
from .winding import spectral_flow, winding_density, winding_number, winding_samples

__all__ = [
    "__version__",
    "AIII",
    "CII",
    "CoefficientField",
    "EnsembleSample",
    "Estimate",
    "LogDet",
    "PointSets",
    "SkewKernelMatrix",
    "aiii_c1",
    "aiii_z11",
    "aiii_zkk",
    "check_time_reversal",
    "cii_kernel_1",
    "cii_kernel_2",
    "cii_kernel_3",
    "cii_zkk",
    "eval_H",
    "eval_K",
    "eval_dK",
    "gauge_factor",
    "j_integral_closed_form",
    "lerch_phi",
    "logdet",
    "make_rng",
    "mc_correlator",
    "mc_det_product",
    "mc_partition",
    "mc_z_tilde",
    "pfaffian",
    "sample_pair",
    "skew_kernel_matrix",
    "skew_norm",
    "skew_poly_even",
    "skew_poly_odd",
    "spectral_flow",
    "spherical_sample",
    "winding_density",
    "winding_number",
    "winding_samples",
]
