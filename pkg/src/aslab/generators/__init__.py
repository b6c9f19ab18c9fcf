"""Point clouds of model sets, limit sets and Julia sets, plus measure oracles."""

from .clouds import (CloudError, PointCloud, finalize, percentile_resolution, read_binary, read_cloud,
                     read_csv, thin, write_binary, write_csv)
from .julia import PolynomialMap, julia_inverse_iteration
from .kleinian import OrbitExplosion, apollonian, kleinian_orbit
from .oracles import (HoroballItinerary, MeasureOracle, OracleError, ZoomSequence, empirical_measure,
                      synthetic_julia_measure, synthetic_kleinian_measure)
from .sequences import decreasing_sequence, inverted_lattice

__all__ = [
    "CloudError", "PointCloud", "finalize", "percentile_resolution", "read_binary", "read_cloud",
    "read_csv", "thin", "write_binary", "write_csv", "PolynomialMap", "julia_inverse_iteration",
    "OrbitExplosion", "apollonian", "kleinian_orbit", "HoroballItinerary", "MeasureOracle",
    "OracleError", "ZoomSequence", "empirical_measure", "synthetic_julia_measure",
    "synthetic_kleinian_measure", "decreasing_sequence", "inverted_lattice",
]
