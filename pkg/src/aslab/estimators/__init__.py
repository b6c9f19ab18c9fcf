"""Covering-count and mass-ratio estimators of dimensions and spectra."""

from .grid import GridIndex, ScaleWindow, WindowError, covering_count, local_covering_count
from .measures import ZeroMassError, measure_spectrum_estimate
from .spectra import (EstimateReport, assouad_dimension_estimate, assouad_spectrum_estimate,
                      box_dimension_estimate, estimation_context, lower_dimension_estimate,
                      lower_spectrum_estimate)

__all__ = [
    "GridIndex", "ScaleWindow", "WindowError", "covering_count", "local_covering_count",
    "ZeroMassError", "measure_spectrum_estimate", "EstimateReport", "assouad_dimension_estimate",
    "assouad_spectrum_estimate", "box_dimension_estimate", "estimation_context",
    "lower_dimension_estimate", "lower_spectrum_estimate",
]
