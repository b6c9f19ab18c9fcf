"""Hierarchical dyadic grid over a point cloud.

Coordinates are normalised to the unit cube by the cloud's bounding box:
origin at the box minimum, side ``L`` equal to the largest extent.  Level
``k`` has cells of side ``L * 2**-k``.  Cells are addressed by Morton keys,
so the parent of a key at level ``k`` is ``key >> d`` at level ``k - 1`` and
sorted key arrays stay sorted under coarsening.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from ..generators.clouds import PointCloud

DEFAULT_SAFETY = 8.0
MIN_LEVELS = 4


class WindowError(ValueError):
    """A scale window violates the resolution safety factor or is too narrow."""


def _interleave(coords, bits):
    """Morton keys for integer cell coordinates of shape (n, d)."""
    coords = np.asarray(coords, dtype=np.int64)
    n, d = coords.shape
    if d == 1:
        return coords[:, 0].copy()
    key = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        for i in range(d):
            key |= ((coords[:, i] >> b) & 1) << (b * d + i)
    return key


class GridIndex:
    """Per-level sorted occupied-cell keys for a point cloud."""

    def __init__(self, cloud: PointCloud, max_level=None):
        self.cloud = cloud
        pts = cloud.points
        self.d = cloud.d
        self.origin = pts.min(axis=0)
        extent = float(np.max(pts.max(axis=0) - self.origin))
        self.side = extent if extent > 0 else 1.0
        cap = min(62 // self.d, 50)
        if max_level is None:
            max_level = cap
        self.max_level = int(min(max_level, cap))
        self.unit = (pts - self.origin) / self.side
        fine = self._coords(self.unit, self.max_level)
        keys = np.sort(_interleave(fine, self.max_level))
        self._levels = {self.max_level: np.unique(keys)}

    # -- cell arithmetic --
    def _coords(self, unit, k):
        n = 1 << k
        c = np.floor(unit * n).astype(np.int64)
        return np.clip(c, 0, n - 1)

    def normalise(self, x):
        return (np.asarray(x, float) - self.origin) / self.side

    def cell_side(self, k):
        return self.side * 2.0 ** (-k)

    def level_for(self, r):
        """Level whose cell side lies in [r, 2r)."""
        return int(math.floor(math.log2(self.side / r) + 1e-12))

    def keys(self, k):
        """Sorted unique occupied-cell keys at level k."""
        if not 0 <= k <= self.max_level:
            raise WindowError(f"level {k} outside [0, {self.max_level}]")
        if k not in self._levels:
            shift = self.d * (self.max_level - k)
            ks = self._levels[self.max_level] >> shift
            keep = np.ones(len(ks), bool)
            keep[1:] = ks[1:] != ks[:-1]
            self._levels[k] = ks[keep]
        return self._levels[k]

    def count(self, k):
        return len(self.keys(k))

    def key_of(self, unit_pts, k):
        return _interleave(self._coords(np.atleast_2d(unit_pts), k), k)

    def block_counts(self, kR, kr, centers_unit):
        """Occupied level-kr cells inside the 3^d block of level-kR cells around each center.

        Returns the fine counts, the number of occupied coarse cells in each
        block, and a mask of centers whose block lies fully inside the unit cube.
        """
        fine = self.keys(kr)
        parents = fine >> (self.d * (kr - kR))
        start = np.ones(len(parents), bool)
        start[1:] = parents[1:] != parents[:-1]
        uniq = parents[start]
        idx = np.flatnonzero(start)
        counts = np.diff(np.append(idx, len(parents)))

        n = 1 << kR
        cc = self._coords(np.atleast_2d(centers_unit), kR)
        total = np.zeros(len(cc), dtype=np.int64)
        coarse = np.zeros(len(cc), dtype=np.int64)
        inside = np.ones(len(cc), bool)
        for off in product((-1, 0, 1), repeat=self.d):
            nb = cc + np.asarray(off, dtype=np.int64)
            ok = np.all((nb >= 0) & (nb < n), axis=1)
            inside &= ok
            if not np.any(ok):
                continue
            key = _interleave(nb[ok], kR)
            pos = np.searchsorted(uniq, key)
            pos = np.minimum(pos, len(uniq) - 1)
            hit = uniq[pos] == key
            add = np.where(hit, counts[pos], 0)
            total[ok] += add
            coarse[ok] += hit
        return total, coarse, inside


@dataclass(frozen=True)
class ScaleWindow:
    """Range of radii [r_min, r_max] in the cloud's own units."""

    r_min: float
    r_max: float
    safety: float = DEFAULT_SAFETY

    @classmethod
    def default(cls, cloud: PointCloud, safety=DEFAULT_SAFETY):
        side = cloud.diameter if cloud.diameter > 0 else 1.0
        return cls(safety * cloud.eps_min, side, safety)

    def validate(self, cloud: PointCloud):
        side = cloud.diameter if cloud.diameter > 0 else 1.0
        if not (0 < self.r_min < self.r_max):
            raise WindowError("window needs 0 < r_min < r_max")
        if self.r_min < self.safety * cloud.eps_min * (1 - 1e-12):
            raise WindowError(
                f"r_min={self.r_min:.3g} below safety*eps_min={self.safety * cloud.eps_min:.3g}")
        if self.r_max > side * (1 + 1e-12):
            raise WindowError(f"r_max={self.r_max:.3g} exceeds the cloud diameter {side:.3g}")

    def levels(self, grid: GridIndex):
        """Dyadic levels whose cell side lies inside the window."""
        top = max(0, math.ceil(math.log2(grid.side / self.r_max) - 1e-12))
        bottom = min(grid.max_level, math.floor(math.log2(grid.side / self.r_min) + 1e-12))
        if bottom - top + 1 < MIN_LEVELS:
            raise WindowError(
                f"window [{self.r_min:.3g}, {self.r_max:.3g}] spans {max(0, bottom - top + 1)} "
                f"dyadic levels, need {MIN_LEVELS}")
        return top, bottom

    def to_dict(self):
        return {"r_min": self.r_min, "r_max": self.r_max, "safety": self.safety}


def covering_count(cloud: PointCloud, r, safety=DEFAULT_SAFETY, grid: GridIndex = None) -> int:
    """Occupied dyadic cells of side in [r, 2r)."""
    if r < safety * cloud.eps_min * (1 - 1e-12):
        raise WindowError(f"r={r:.3g} below resolution safety*eps_min={safety * cloud.eps_min:.3g}")
    grid = grid or GridIndex(cloud)
    k = grid.level_for(r)
    if k <= 0:
        return 1
    return grid.count(min(k, grid.max_level))


def local_covering_count(cloud: PointCloud, x, R, r, safety=DEFAULT_SAFETY, grid: GridIndex = None) -> int:
    """Occupied level-r cells among cloud points within distance R of x."""
    if not r < R:
        raise WindowError("local covering needs r < R")
    if r < safety * cloud.eps_min * (1 - 1e-12):
        raise WindowError(f"r={r:.3g} below resolution safety*eps_min={safety * cloud.eps_min:.3g}")
    grid = grid or GridIndex(cloud)
    x = np.asarray(x, float).reshape(-1)
    near = cloud.points[np.linalg.norm(cloud.points - x, axis=1) <= R]
    if len(near) == 0:
        return 0
    k = max(0, min(grid.level_for(r), grid.max_level))
    keys = grid.key_of(grid.normalise(near), k)
    return int(len(np.unique(keys)))
