"""Catalog builders for the three shipped model families."""

from .toral import toral_periodic_points, toral_suspension_catalog
from .sft import sft_catalog
from .fuchsian import bolza_catalog, fuchsian_catalog, punctured_torus_catalog

__all__ = [
    "toral_periodic_points",
    "toral_suspension_catalog",
    "sft_catalog",
    "fuchsian_catalog",
    "punctured_torus_catalog",
    "bolza_catalog",
]
