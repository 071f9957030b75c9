"""Periodic-orbit catalogs and dynamical zeta numerics for hyperbolic flows.

The package builds exact catalogs of prime closed orbits for three model
families (hyperbolic toral suspensions, subshift suspensions, Fuchsian
length spectra) and evaluates truncated zeta functions, dynamical
determinants, mock determinants and flat traces on them, together with
resonance estimation and prime-orbit counting.
"""

from .catalog import (OrbitCatalog, OrbitInstance, PrimeOrbit, RoofFunction,
                      catalog_validate, read_catalog, write_catalog)
from .engine import (MockDeterminantPoly, TruncationPolicy,
                     alternating_product_log, chi_ell, dyn_determinant_log,
                     flat_trace, mock_determinant_log, natural_trace_check,
                     ruelle_log, selberg_log)
from .counting import (chebyshev_functions, counting_report, entropy_estimate,
                       li, pgt_error_fit, prime_counting)
from .linalg_ext import (SmallMatrix, det_one_minus, exterior_trace,
                         orientation_sign)
from .resonances import (Rectangle, SyntheticPoleSource, leading_resonance,
                         newton_refine, winding_count)
from .sources import (bolza_catalog, fuchsian_catalog, punctured_torus_catalog,
                      sft_catalog, toral_periodic_points,
                      toral_suspension_catalog)

__version__ = "0.1.0"

__all__ = [
    "OrbitCatalog", "OrbitInstance", "PrimeOrbit", "RoofFunction",
    "catalog_validate", "read_catalog", "write_catalog",
    "MockDeterminantPoly", "TruncationPolicy", "alternating_product_log",
    "chi_ell", "dyn_determinant_log", "flat_trace", "mock_determinant_log",
    "natural_trace_check", "ruelle_log", "selberg_log",
    "chebyshev_functions", "counting_report", "entropy_estimate", "li",
    "pgt_error_fit", "prime_counting",
    "SmallMatrix", "det_one_minus", "exterior_trace", "orientation_sign",
    "Rectangle", "SyntheticPoleSource", "leading_resonance", "newton_refine",
    "winding_count",
    "bolza_catalog", "fuchsian_catalog", "punctured_torus_catalog",
    "sft_catalog", "toral_periodic_points", "toral_suspension_catalog",
    "__version__",
]
