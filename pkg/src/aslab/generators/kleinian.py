"""Limit-set point clouds from orbit enumeration of Mobius generators.

Words are enumerated breadth first over reduced words in the generators and
their inverses.  An orbit point ``g(b)`` of an interior basepoint whose ball
norm reaches ``1 - eps_proj`` is projected radially to the sphere and emitted.
With ``terminate=True`` such a word is not extended further; this keeps the
sampling roughly uniform at Euclidean scale ``eps_proj`` instead of piling
points up near the shortest words.  A boundary basepoint is mapped directly
(every orbit point is then already on the sphere).
"""

from __future__ import annotations

import numpy as np

from ..geometry import (MobiusMap, cayley_boundary, cayley_transform, inverse_cayley_boundary,
                        inverse_cayley_transform, sphere_point)
from .clouds import CloudError, PointCloud, finalize

DEFAULT_EPS_PROJ = 1e-3
DEFAULT_CAP = 2_000_000


class OrbitExplosion(CloudError):
    """Raised when the point cap is exceeded; ``partial`` holds what was built."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


def _symmetrize(generators):
    mats = [np.asarray(g.matrix, complex) for g in generators]
    out = list(mats)
    for m in mats:
        inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
        if not any(np.allclose(inv, o, atol=1e-12) or np.allclose(-inv, o, atol=1e-12) for o in out):
            out.append(inv)
    stack = np.array(out)
    inverse_of = np.full(len(stack), -1)
    for i, m in enumerate(stack):
        for j, o in enumerate(stack):
            if np.allclose(m @ o, np.eye(2), atol=1e-9) or np.allclose(m @ o, -np.eye(2), atol=1e-9):
                inverse_of[i] = j
    return stack, inverse_of


def _act_interior(M, x):
    """Batched Poincare extension of matrices M (n,2,2) to one point x of H^3."""
    z = complex(x[0], x[1])
    t = x[2]
    a, b, c, d = M[:, 0, 0], M[:, 0, 1], M[:, 1, 0], M[:, 1, 1]
    w = c * z + d
    den = np.abs(w) ** 2 + np.abs(c) ** 2 * t * t
    num = (a * z + b) * np.conj(w) + a * np.conj(c) * t * t
    zn = num / den
    return cayley_transform(np.stack([zn.real, zn.imag, t / den], axis=-1))


def _act_boundary(M, z0):
    """Batched action on a boundary point, given as a complex number or None (infinity)."""
    a, b, c, d = M[:, 0, 0], M[:, 0, 1], M[:, 1, 0], M[:, 1, 1]
    if z0 is None:
        num, den = a, c
    else:
        num, den = a * z0 + b, c * z0 + d
    at_inf = np.abs(den) < 1e-300
    w = num / np.where(at_inf, 1, den)
    out = cayley_boundary(np.stack([w.real, w.imag], axis=-1))
    out[at_inf] = (0.0, 0.0, 1.0)
    return out


def _basepoint(basepoint):
    """Returns ('interior', halfspace point) or ('boundary', complex or None)."""
    if basepoint is None:
        return "interior", np.array([0.0, 0.0, 1.0])
    if isinstance(basepoint, str):
        if basepoint != "inf":
            raise CloudError(f"unknown basepoint {basepoint!r}")
        return "boundary", None
    if isinstance(basepoint, (complex, np.complexfloating)):
        return "boundary", complex(basepoint)
    y = np.asarray(basepoint, float)
    if y.shape != (3,):
        raise CloudError("basepoint must be a 3-vector in the ball, a complex boundary point or 'inf'")
    n = np.linalg.norm(y)
    if n >= 1 - 1e-12:
        if abs(n - 1) > 1e-9:
            raise CloudError("basepoint lies outside the ball")
        if np.allclose(y, (0, 0, 1)):
            return "boundary", None
        w = y[:2] / (1 - y[2])
        return "boundary", complex(w[0], w[1])
    return "interior", inverse_cayley_transform(y)


def kleinian_orbit(generators, depth, basepoint=None, eps_proj=DEFAULT_EPS_PROJ,
                   cap=DEFAULT_CAP, terminate=False, special=None, provenance=None, chart="sphere"):
    """Boundary cloud approximating the limit set of the group generated by ``generators``.

    ``depth`` caps the word length.  With ``chart="plane"`` the sphere points
    are mapped back to the plane (inverse Cayley transform); this suits limit
    sets that stay away from the image of infinity.  Returns a
    :class:`PointCloud` whose resolution is the 1st-percentile
    nearest-neighbour distance.
    """
    if chart not in ("sphere", "plane"):
        raise CloudError(f"unknown chart {chart!r}")
    gens = [g if isinstance(g, MobiusMap) else MobiusMap.from_flat(g) for g in generators]
    if not gens:
        raise CloudError("empty generator list")
    depth = int(depth)
    if depth < 1:
        raise CloudError("depth must be at least 1")
    mats, inverse_of = _symmetrize(gens)
    kind, bp = _basepoint(basepoint)
    ng = len(mats)

    frontier = mats.copy()
    last = np.arange(ng)
    chunks = []
    emitted = 0
    length = 0
    explosion = None
    for length in range(1, depth + 1):
        if kind == "interior":
            y = _act_interior(frontier, bp)
            r = np.linalg.norm(y, axis=1)
            hit = r >= 1 - eps_proj
            pts = y[hit] / r[hit, None]
        else:
            hit = np.ones(len(frontier), bool)
            pts = _act_boundary(frontier, bp)
        chunks.append(pts)
        emitted += len(pts)
        if emitted > cap:
            explosion = f"orbit point cap {cap} exceeded at word length {length}"
            break
        if terminate:
            frontier, last = frontier[~hit], last[~hit]
        if length == depth or len(frontier) == 0:
            break
        nxt, nlast = [], []
        for g in range(ng):
            sel = last != inverse_of[g]
            nxt.append(frontier[sel] @ mats[g])
            nlast.append(np.full(int(sel.sum()), g))
        frontier = np.concatenate(nxt)
        last = np.concatenate(nlast)
        if len(frontier) > 2 * cap:
            explosion = f"word frontier exceeded {2 * cap} at word length {length + 1}"
            break
    pts = np.concatenate(chunks) if chunks else np.zeros((0, 3))
    if kind == "boundary":
        pts = np.concatenate([pts, _act_boundary(np.eye(2, dtype=complex)[None], bp)])
    if len(pts) == 0:
        if explosion:
            raise OrbitExplosion(explosion + " before any point reached the boundary")
        raise CloudError("no orbit point reached the boundary; increase depth or eps_proj")
    prov = provenance or f"kleinian_orbit(ngen={len(gens)}, depth={depth}, eps_proj={eps_proj}, terminate={terminate})"
    if chart == "plane":
        pts = pts[np.linalg.norm(pts - (0.0, 0.0, 1.0), axis=1) > 1e-12]
        pts = inverse_cayley_boundary(pts)
        if special is not None and len(special):
            special = inverse_cayley_boundary(np.asarray(special, float).reshape(-1, 3))
    cloud = finalize(pts, prov, special=special)
    if explosion:
        raise OrbitExplosion(explosion, partial=cloud)
    return cloud


def parabolic_special_points(generators):
    """Sphere images of the fixed points of the parabolic generators."""
    out = []
    for g in generators:
        g = g if isinstance(g, MobiusMap) else MobiusMap.from_flat(g)
        if g.is_parabolic:
            out.append(sphere_point(g.fixed_points()[0]))
    return np.array(out).reshape(-1, 3)


# --- presets ------------------------------------------------------------------

# Generators of a group whose limit set is an Apollonian gasket inside
# [-1, 1]^2: both generators and their commutator are parabolic (fixed points
# 0, -i and 1).
APOLLONIAN = (
    MobiusMap(1, 0, -2j, 1),
    MobiusMap(1 - 1j, 1, 1, 1 + 1j),
)


def apollonian(eps_proj=3e-5, depth=400, cap=DEFAULT_CAP, chart="plane") -> PointCloud:
    """Apollonian gasket cloud, enumerated with boundary-terminated words."""
    a, b = APOLLONIAN
    words = [a, b, a @ b @ a.inverse() @ b.inverse()]
    return kleinian_orbit(APOLLONIAN, depth, eps_proj=eps_proj, cap=cap, terminate=True,
                          special=parabolic_special_points(words), chart=chart,
                          provenance=f"apollonian(eps_proj={eps_proj}, depth={depth}, chart={chart})")
