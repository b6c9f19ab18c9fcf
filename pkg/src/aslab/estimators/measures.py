"""Mass-ratio spectrum estimates for measure oracles."""

from __future__ import annotations

import numpy as np

from ..formulas import ASSOUAD, LOWER
from ..generators.oracles import MeasureOracle, OracleError, depth_grid
from .spectra import EstimateReport


class ZeroMassError(OracleError):
    """A queried ball had zero (or non-finite) mass."""


def measure_spectrum_estimate(oracle: MeasureOracle, theta, tags=None, radii=None, mode=ASSOUAD,
                              depths=None) -> EstimateReport:
    """sup (assouad) or inf (lower) of log(m(B(x, r^theta)) / m(B(x, r))) / log(r^(theta-1)).

    The extremum runs over ``tags`` and the small radii r.  Radii may be given
    directly (``radii``) or as depths u = -log r (``depths``); the default is
    a geometric grid of depths from 50 to 2*10^4.  The coupled large radius
    is R = r^theta, i.e. depth theta*u.
    """
    if mode not in (ASSOUAD, LOWER):
        raise ValueError(f"unknown mode {mode!r}")
    theta = float(theta)
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if radii is not None and depths is not None:
        raise ValueError("pass radii or depths, not both")
    if radii is not None:
        r = np.asarray(radii, float)
        if np.any(r <= 0) or np.any(r >= 1):
            raise ValueError("radii must lie in (0, 1)")
        u = -np.log(r)
    else:
        u = depth_grid() if depths is None else np.asarray(depths, float)
    u = np.sort(np.asarray(u, float))
    tags = list(oracle.tags if tags is None else tags)
    if not tags:
        raise ValueError("no tags to evaluate")

    small = oracle.log_mass_matrix(tags, u)          # balls of radius r
    large = oracle.log_mass_matrix(tags, theta * u)  # balls of radius r^theta
    both = ~np.isnan(small) & ~np.isnan(large)
    if not np.any(both):
        raise OracleError("no tag is valid at both coupled radii of any grid depth")
    if np.any(~np.isfinite(small[both])) or np.any(~np.isfinite(large[both])):
        raise ZeroMassError("oracle returned zero mass for a positive radius")
    gap = (1 - theta) * u
    slope = np.where(both, (large - small) / gap, np.nan)
    sign = 1.0 if mode == ASSOUAD else -1.0
    score = np.where(both, sign * slope, -np.inf)

    # per depth: the extremal tag
    best = np.argmax(score, axis=0)
    table = []
    for j in np.flatnonzero(np.any(both, axis=0)):
        i = best[j]
        table.append((float(gap[j]), float(large[i, j] - small[i, j]), str(tags[i]), float(u[j]),
                      float(theta * u[j]), float(slope[i, j])))
    i, j = np.unravel_index(np.argmax(score), score.shape)
    value = float(slope[i, j])
    witness = {"slope": value, "tag": str(tags[i]), "log_r": float(-u[j]), "log_R": float(-theta * u[j]),
               "depth": float(u[j])}
    window = {"depth_min": float(u[0]), "depth_max": float(u[-1]), "n_depths": int(len(u)),
              "n_tags": len(tags), "oracle": oracle.kind}
    return EstimateReport(f"measure_{mode}_spectrum", value, 0.0, theta=theta, mode="supinf",
                          witness=witness, table=table, window=window, d=None)
