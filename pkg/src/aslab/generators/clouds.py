"""Point clouds, their resolution bookkeeping and on-disk formats.

Two formats are supported.  The CSV form has ``#``-prefixed header lines
carrying the dimension, the resolution and a provenance string, followed by
one point per row.  The binary twin is::

    b"ASLB1" | uint32 d | uint64 n | float64 eps_min | uint32 len | provenance
    | n*d little-endian float64 [| uint64 m | m*d float64 special points]

Both round-trip exactly (CSV uses ``repr`` precision).
"""

from __future__ import annotations

import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

MAGIC = b"ASLB1"
MAX_DIM = 3


class CloudError(ValueError):
    pass


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    eps_min: float
    provenance: str = ""
    special: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise CloudError("a cloud needs at least one point")
        if pts.shape[1] > MAX_DIM:
            raise CloudError(f"ambient dimension {pts.shape[1]} exceeds {MAX_DIM}")
        if not np.all(np.isfinite(pts)):
            raise CloudError("non-finite coordinates")
        if not (self.eps_min > 0 and np.isfinite(self.eps_min)):
            raise CloudError("eps_min must be a positive number")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        sp = self.special
        sp = np.zeros((0, pts.shape[1])) if sp is None else np.asarray(sp, float).reshape(-1, pts.shape[1])
        object.__setattr__(self, "special", sp)

    @property
    def d(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    @property
    def bbox(self):
        return self.points.min(axis=0), self.points.max(axis=0)

    @property
    def diameter(self):
        lo, hi = self.bbox
        return float(np.max(hi - lo))

    def transformed(self, scale=1.0, shift=0.0):
        """Uniformly scaled and translated copy; the resolution scales too."""
        shift = np.broadcast_to(np.asarray(shift, float), (self.d,))
        return PointCloud(self.points * scale + shift, self.eps_min * abs(scale),
                          self.provenance, self.special * scale + shift)


# --- resolution helpers -------------------------------------------------------

def nn_distances(points):
    pts = np.asarray(points, float)
    if len(pts) < 2:
        return np.zeros(0)
    dist, _ = cKDTree(pts).query(pts, k=2)
    return dist[:, 1]


def percentile_resolution(points, q=1.0):
    """Resolution estimate: the q-th percentile of nearest-neighbour distances."""
    d = nn_distances(points)
    d = d[d > 0]
    if len(d) == 0:
        return 1.0
    return float(np.percentile(d, q))


def thin(points, radius):
    """Greedy thinning so that the kept points are pairwise >= radius apart.

    Processes points in input order, so the result is deterministic.
    """
    pts = np.asarray(points, float)
    if len(pts) < 2 or radius <= 0:
        return pts
    # grid-snap first: duplicates and near-duplicates vanish cheaply
    keys = np.floor(pts / radius).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    pts = pts[np.sort(first)]
    tree = cKDTree(pts)
    pairs = tree.query_pairs(radius * (1 - 1e-12), output_type="ndarray")
    if len(pairs) == 0:
        return pts
    keep = np.ones(len(pts), bool)
    # greedy pass: walk pairs sorted by lower index, drop the later point
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    for i, j in pairs[order]:
        if keep[i] and keep[j]:
            keep[j] = False
    return pts[keep]


def finalize(points, provenance, eps_min=None, special=None, q=1.0):
    """Estimate eps_min (if not given) and thin the cloud at eps_min/2."""
    pts = np.asarray(points, float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if eps_min is None:
        eps_min = percentile_resolution(pts, q)
    pts = thin(pts, eps_min / 2)
    return PointCloud(pts, eps_min, provenance, special)


# --- I/O ----------------------------------------------------------------------

def _atomic_write(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cloud_to_csv_bytes(cloud: PointCloud) -> bytes:
    buf = io.StringIO()
    buf.write(f"# d={cloud.d}\n")
    buf.write(f"# eps_min={cloud.eps_min!r}\n")
    buf.write(f"# provenance={json.dumps(cloud.provenance)}\n")
    if len(cloud.special):
        buf.write(f"# special={json.dumps(cloud.special.tolist())}\n")
    buf.write(",".join(f"x{i}" for i in range(cloud.d)) + "\n")
    for row in cloud.points:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue().encode()


def write_csv(cloud: PointCloud, path):
    _atomic_write(path, cloud_to_csv_bytes(cloud))


def read_csv(path) -> PointCloud:
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            elif line[0] == "x":
                continue
            else:
                rows.append([float(v) for v in line.split(",")])
    if "d" not in meta or "eps_min" not in meta:
        raise CloudError(f"{path}: missing cloud header")
    d = int(meta["d"])
    pts = np.array(rows, float).reshape(-1, d)
    special = json.loads(meta["special"]) if "special" in meta else None
    prov = json.loads(meta.get("provenance", '""'))
    return PointCloud(pts, float(meta["eps_min"]), prov, special)


def cloud_to_binary_bytes(cloud: PointCloud) -> bytes:
    prov = cloud.provenance.encode()
    head = MAGIC + struct.pack("<IQdI", cloud.d, len(cloud), cloud.eps_min, len(prov)) + prov
    body = np.ascontiguousarray(cloud.points, dtype="<f8").tobytes()
    # optional trailer: count of special points, then their coordinates
    tail = b""
    if len(cloud.special):
        tail = struct.pack("<Q", len(cloud.special)) + np.ascontiguousarray(cloud.special, dtype="<f8").tobytes()
    return head + body + tail


def write_binary(cloud: PointCloud, path):
    _atomic_write(path, cloud_to_binary_bytes(cloud))


def read_binary(path) -> PointCloud:
    raw = Path(path).read_bytes()
    if raw[:5] != MAGIC:
        raise CloudError(f"{path}: bad magic")
    d, n, eps, plen = struct.unpack_from("<IQdI", raw, 5)
    off = 5 + struct.calcsize("<IQdI")
    prov = raw[off:off + plen].decode()
    off += plen
    pts = np.frombuffer(raw, dtype="<f8", count=n * d, offset=off).reshape(n, d)
    off += 8 * n * d
    special = None
    if len(raw) > off:
        (m,) = struct.unpack_from("<Q", raw, off)
        special = np.frombuffer(raw, dtype="<f8", count=m * d, offset=off + 8).reshape(m, d).copy()
    return PointCloud(pts.copy(), eps, prov, special)


def read_cloud(path) -> PointCloud:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(5)
    return read_binary(path) if magic == MAGIC else read_csv(path)
