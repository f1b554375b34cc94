"""Wavelet series with prescribed divergence: dyadic coefficient fields,
wavelet systems with covering checks, Besov sequence norms, explicit
generators and finite-scale divergence analysis."""

from .dyadic import BesovParams, CoefficientField, CoeffIndex, DyadicCube
from .systems import (DyadicCovering, CoveringNotFound, WaveletSystem, find_dyadic_covering,
                      system_by_name)
from .besov import besov_norm, weighted_norm, count_large
from .divergence import EstimatorSettings, divergence_exponent, partial_sum
from .generators import SaturatingConfig, deterministic_e, point_divergent, saturating_random
from .spectrum import alpha_seeds, coefficient_count_spectrum, estimate_spectrum, theoretical_spectrum

__version__ = "0.1.0"

__all__ = [
    "BesovParams", "CoefficientField", "CoeffIndex", "DyadicCube",
    "DyadicCovering", "CoveringNotFound", "WaveletSystem", "find_dyadic_covering", "system_by_name",
    "besov_norm", "weighted_norm", "count_large",
    "EstimatorSettings", "divergence_exponent", "partial_sum",
    "SaturatingConfig", "deterministic_e", "point_divergent", "saturating_random",
    "alpha_seeds", "coefficient_count_spectrum", "estimate_spectrum", "theoretical_spectrum",
]
