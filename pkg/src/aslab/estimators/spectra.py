"""Box, Assouad-type and lower-type dimension estimates for point clouds.

Two-scale counts use the grid block around a center: at the coarse level
``kR`` take the 3^d cells around the center's cell and count the occupied
fine cells at level ``kr`` inside them.  This is within a constant factor of
N_r(B(x, R) ∩ F), and the constants drop out of the fitted slopes.

Scales are measured relative to the top of the scale window ``r_max``, so a
theta-coupled pair is ``R/r_max = (r/r_max)**theta``; in level terms
``kR - top = round(theta * (kr - top))``.  With the default window
(``r_max`` = bounding-box side) this is R/L = (r/L)**theta, and every estimate
is invariant under uniform scaling of the cloud and its window.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..generators.clouds import PointCloud
from .grid import GridIndex, ScaleWindow, WindowError

ALL_CENTERS_MAX = 100_000
SAMPLED_CENTERS = 10_000
MIN_GAP_SPECTRUM = 2  # R/r >= 4: at R/r = 2 the extremal count is mostly noise
MIN_GAP_DIMENSION = 4  # R/r >= 16 for the Assouad and lower dimensions
MIN_DISTINCT_GAPS = 3  # a fitted slope needs three abscissae to be checkable
# Gaps longer than half the window leave too few coarse levels to search for
# the extremal location, and the counts saturate at the cloud's resolution.


def thread_count():
    try:
        return max(1, int(os.environ.get("ASLAB_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class EstimateReport:
    """One empirical dimension value with the data that produced it.

    ``table`` rows are ``(x, y, k_R, k_r, center_label, y_coarse)``: the
    regression abscissa (log2 of R/r), log2 of the extremal count, where it
    was attained, and log2 of the occupied coarse cells in that block.
    Refitting the table reproduces the unclipped slope ``witness["slope"]``.
    """

    kind: str
    value: float
    half_width: float
    theta: float = None
    mode: str = "regression"
    witness: dict = field(default_factory=dict)
    table: list = field(default_factory=list)
    window: dict = field(default_factory=dict)
    d: int = 1

    def refit(self):
        """Slope recomputed from the table alone (before clipping to [0, d])."""
        x = np.array([row[0] for row in self.table], float)
        y = np.array([row[1] for row in self.table], float)
        if self.mode == "supinf":
            ratios = y / x
            return float(ratios.max() if self.kind.startswith("measure_assouad") else ratios.min())
        if self.mode == "raw":
            ratios = _raw_ratios(self.table)
            return float(ratios.max() if self.kind.startswith("assouad") else ratios.min())
        return _fit(x, y)[0]

    def to_dict(self):
        return {
            "kind": self.kind, "theta": self.theta, "value": self.value,
            "half_width": self.half_width, "mode": self.mode, "witness": self.witness,
            "window": self.window,
            "table": [list(map(_plain, row)) for row in self.table],
        }


def _plain(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _fit(x, y):
    """Least-squares slope and 95% half-width (0 when fewer than 3 points)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if len(x) < 2 or np.ptp(x) == 0:
        return 0.0, float("inf")
    res = stats.linregress(x, y)
    if len(x) < 3:
        return float(res.slope), float("inf")
    t = stats.t.ppf(0.975, len(x) - 2)
    return float(res.slope), float(t * res.stderr)


# --- center sampling ----------------------------------------------------------

def select_centers(cloud: PointCloud, policy="auto", n_samples=SAMPLED_CENTERS, seed=0):
    """Indices into ``cloud.points`` plus the special points appended after them.

    Returns an array of center coordinates and a matching array of labels
    (cloud index, or -1 - j for the j-th special point).
    """
    n = len(cloud)
    if policy == "all" or (policy == "auto" and n <= ALL_CENTERS_MAX):
        idx = np.arange(n)
    else:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(n, size=min(n, int(n_samples)), replace=False))
    pts = cloud.points[idx]
    labels = idx.astype(np.int64)
    if len(cloud.special):
        pts = np.concatenate([pts, cloud.special])
        labels = np.concatenate([labels, -1 - np.arange(len(cloud.special))])
    return pts, labels


def _center_coords(cloud, centers, labels, label):
    return (cloud.points[label] if label >= 0 else cloud.special[-1 - label]).tolist()


class _Context:
    """Grid, window levels and centers shared by the estimators of one cloud."""

    def __init__(self, cloud, window=None, centers="auto", seed=0, grid=None):
        self.cloud = cloud
        self.window = window or ScaleWindow.default(cloud)
        self.window.validate(cloud)
        self.grid = grid or GridIndex(cloud)
        self.top, self.bottom = self.window.levels(self.grid)
        self.centers, self.labels = select_centers(cloud, centers, seed=seed)
        self.centers_unit = self.grid.normalise(self.centers)
        self._cache = {}

    def extremal(self, kR, kr, mode, raw=False):
        """Extremal block over the centers: (count, occupied coarse cells, center position).

        Regression mode ranks centers by the fine count, raw mode by the mean
        number of fine cells per occupied coarse cell.  Lower mode skips
        centers whose block leaves the grid, unless every block does (the two
        coarsest levels, where the clipped blocks already span the cloud).
        """
        key = (kR, kr)
        if key not in self._cache:
            counts, coarse, inside = self.grid.block_counts(kR, kr, self.centers_unit)
            ok = inside if np.any(inside) else np.ones(len(counts), bool)
            ratio = counts / np.maximum(coarse, 1)
            entry = {}
            for name, score, pick in (("assouad", counts, np.argmax), ("assouad_raw", ratio, np.argmax)):
                i = int(pick(score))
                entry[name] = (int(counts[i]), int(coarse[i]), i)
            big = np.iinfo(np.int64).max
            for name, score in (("lower", np.where(ok, counts, big)), ("lower_raw", np.where(ok, ratio, np.inf))):
                i = int(np.argmin(score))
                entry[name] = (int(counts[i]), int(coarse[i]), i)
            self._cache[key] = entry
        return self._cache[key][mode + ("_raw" if raw else "")]

    def window_dict(self):
        d = self.window.to_dict()
        d.update({"level_top": self.top, "level_bottom": self.bottom, "side": self.grid.side,
                  "n_centers": int(len(self.centers))})
        return d


# --- box dimension ------------------------------------------------------------

def box_dimension_estimate(cloud: PointCloud, window: ScaleWindow = None, grid=None) -> EstimateReport:
    """Least-squares slope of log N_r against -log r over the dyadic levels of the window."""
    window = window or ScaleWindow.default(cloud)
    window.validate(cloud)
    grid = grid or GridIndex(cloud)
    top, bottom = window.levels(grid)
    ks = np.arange(top, bottom + 1)
    counts = np.array([grid.count(int(k)) for k in ks])
    y = np.log2(counts)
    value, hw = _fit(ks, y)
    table = [(float(k), float(v), 0, int(k), -1, 0.0) for k, v in zip(ks, y)]
    wd = window.to_dict()
    wd.update({"level_top": top, "level_bottom": bottom, "side": grid.side})
    return EstimateReport("box", float(min(max(0.0, value), cloud.d)), hw, table=table, window=wd,
                          witness={"slope": value, "levels": [int(top), int(bottom)]}, d=cloud.d)


# --- spectra ------------------------------------------------------------------

def _theta_pairs(ctx, theta):
    pairs = []
    for kr in range(ctx.top, ctx.bottom + 1):
        kR = ctx.top + int(np.floor(theta * (kr - ctx.top) + 0.5))
        if kr - kR >= MIN_GAP_SPECTRUM:
            pairs.append((kR, kr))
    return pairs


def _spectrum(ctx, theta, mode, raw=False):
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    pairs = _theta_pairs(ctx, theta)
    if len(pairs) < 3:
        raise WindowError(f"window too narrow for theta={theta}: {len(pairs)} coupled scale pairs")
    rows = []
    for (kR, kr), (count, coarse, i) in zip(pairs, _pmap(lambda p: ctx.extremal(p[0], p[1], mode, raw), pairs)):
        rows.append((float(kr - kR), float(np.log2(count)), kR, kr, int(ctx.labels[i]), float(np.log2(coarse))))
    gaps = len({r[0] for r in rows})
    if not raw and gaps < MIN_DISTINCT_GAPS:
        raise WindowError(f"window too narrow for theta={theta}: {gaps} distinct scale gaps")
    return _finish(ctx, f"{mode}_spectrum", rows, mode, raw, theta)


def _raw_ratios(table):
    """Two-scale slopes log(fine cells per occupied coarse cell) / log(R/r)."""
    return np.array([(row[1] - row[5]) / row[0] for row in table], float)


def _finish(ctx, kind, rows, mode, raw, theta=None):
    x = np.array([r[0] for r in rows])
    y = np.array([r[1] for r in rows])
    d = ctx.cloud.d
    if raw:
        ratios = _raw_ratios(rows)
        j = int(np.argmax(ratios) if mode == "assouad" else np.argmin(ratios))
        slope, hw = float(ratios[j]), 0.0
        best = rows[j]
    else:
        slope, hw = _fit(x, y)
        resid = y - slope * x
        best = rows[int(np.argmax(resid) if mode == "assouad" else np.argmin(resid))]
    witness = {
        "slope": slope, "x": best[0], "y": best[1], "k_R": best[2], "k_r": best[3],
        "center_label": best[4],
        "center": _center_coords(ctx.cloud, ctx.centers, ctx.labels, best[4]),
        "R": ctx.grid.cell_side(best[2]), "r": ctx.grid.cell_side(best[3]),
    }
    value = float(min(max(slope, 0.0), d))
    return EstimateReport(kind, value, hw, theta=theta, mode="raw" if raw else "regression",
                          witness=witness, table=rows, window=ctx.window_dict(), d=d)


def assouad_spectrum_estimate(cloud, theta, window=None, centers="auto", raw=False, seed=0, context=None):
    ctx = context or _Context(cloud, window, centers, seed)
    return _spectrum(ctx, theta, "assouad", raw)


def lower_spectrum_estimate(cloud, theta, window=None, centers="auto", raw=False, seed=0, context=None):
    ctx = context or _Context(cloud, window, centers, seed)
    return _spectrum(ctx, theta, "lower", raw)


def _dimension(ctx, mode, raw=False):
    best = {}
    max_gap = max(MIN_GAP_DIMENSION + 2, (ctx.bottom - ctx.top) // 2)
    sign = 1 if mode == "assouad" else -1
    for kr in range(ctx.top, ctx.bottom + 1):
        for kR in range(max(ctx.top, kr - max_gap), kr - MIN_GAP_DIMENSION + 1):
            count, coarse, i = ctx.extremal(kR, kr, mode, raw)
            g = kr - kR
            score = count / coarse if raw else count
            if g not in best or sign * score > sign * best[g][0]:
                best[g] = (score, count, coarse, kR, kr, i)
    # A long gap whose extremal pair sits on the finest level is censored by
    # the resolution: a finer window could raise (or lower) its count further.
    gaps = sorted(best)
    censored = []
    while len(gaps) > 3 and best[gaps[-1]][4] == ctx.bottom:
        censored.append(gaps.pop())
    if len(gaps) < 3:
        raise WindowError("window too narrow for two-scale pairs with R/r >= 16")
    rows = [(float(g), float(np.log2(best[g][1])), best[g][3], best[g][4], int(ctx.labels[best[g][5]]),
             float(np.log2(best[g][2]))) for g in gaps]
    report = _finish(ctx, f"{mode}_dimension", rows, mode, raw)
    report.witness["censored_gaps"] = sorted(censored)
    return report


def assouad_dimension_estimate(cloud, window=None, centers="auto", raw=False, seed=0, context=None):
    ctx = context or _Context(cloud, window, centers, seed)
    return _dimension(ctx, "assouad", raw)


def lower_dimension_estimate(cloud, window=None, centers="auto", raw=False, seed=0, context=None):
    ctx = context or _Context(cloud, window, centers, seed)
    return _dimension(ctx, "lower", raw)


def estimation_context(cloud, window=None, centers="auto", seed=0):
    """Shared grid/centers/count cache for several estimates on one cloud."""
    return _Context(cloud, window, centers, seed)
