"""Hyperbolic and Mobius geometry in the Poincare ball and upper half-space.

Points of the ball model are Euclidean vectors of norm < 1 (boundary points
have norm 1).  The upper half-space model uses the last coordinate as height.
Mobius maps are SL(2, C) matrices acting on the Riemann sphere and, through
the Poincare extension, on upper half-space H^3 (or H^2 for real matrices).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

BOUNDARY_TOL = 1e-12
PARABOLIC_TOL = 1e-9
DISJOINT_SLACK = 1e-12
GOLDEN_TOL = 1e-8


class GeometryError(ValueError):
    pass


def _as_points(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise GeometryError("points must be vectors")
    return x


def _check_interior(*pts):
    for p in pts:
        n2 = np.sum(p * p, axis=-1)
        if np.any(n2 >= 1.0):
            raise GeometryError("point on or outside the unit sphere")


# --- distances ----------------------------------------------------------------

def hyperbolic_distance(p, q):
    """Distance in the Poincare ball, d = 2 asinh(|p-q| / sqrt((1-|p|^2)(1-|q|^2)))."""
    p, q = _as_points(p), _as_points(q)
    _check_interior(p, q)
    diff = np.sqrt(np.sum((p - q) ** 2, axis=-1))
    denom = np.sqrt((1 - np.sum(p * p, axis=-1)) * (1 - np.sum(q * q, axis=-1)))
    d = 2 * np.arcsinh(diff / denom)
    return float(d) if np.ndim(d) == 0 else d


def halfspace_distance(p, q):
    """Distance in upper half-space; the last coordinate is the height."""
    p, q = _as_points(p), _as_points(q)
    tp, tq = p[..., -1], q[..., -1]
    if np.any(tp <= 0) or np.any(tq <= 0):
        raise GeometryError("half-space points need positive height")
    diff = np.sqrt(np.sum((p - q) ** 2, axis=-1))
    d = 2 * np.arcsinh(diff / (2 * np.sqrt(tp * tq)))
    return float(d) if np.ndim(d) == 0 else d


def radial_distance_integral(z, n=20001):
    """Hyperbolic length of the segment [0, z] by Simpson quadrature of 2|dz|/(1-|z|^2)."""
    from scipy.integrate import simpson

    s = np.linalg.norm(_as_points(z))
    t = np.linspace(0.0, s, n)
    return float(simpson(2.0 / (1.0 - t * t), x=t))


def _plane_basis(p, q):
    """Orthonormal e1, e2 spanning a plane containing 0, p and q."""
    dim = p.shape[0]
    base = p if np.linalg.norm(p) > 1e-15 else q
    if np.linalg.norm(base) <= 1e-15:
        base = np.eye(dim)[0]
    e1 = base / np.linalg.norm(base)
    other = q if base is p else p
    rest = other - np.dot(other, e1) * e1
    if np.linalg.norm(rest) <= 1e-14 * max(1.0, np.linalg.norm(other)):
        # collinear with the origin; any orthogonal direction will do
        trial = np.eye(dim)[np.argmin(np.abs(e1))]
        rest = trial - np.dot(trial, e1) * e1
    e2 = rest / np.linalg.norm(rest)
    return e1, e2


def geodesic_endpoints(P, Q):
    """Boundary endpoints (A, B) of the geodesic through P and Q, A nearer P."""
    P, Q = _as_points(P), _as_points(Q)
    e1, e2 = _plane_basis(P, Q)
    p = np.array([P @ e1, P @ e2])
    q = np.array([Q @ e1, Q @ e2])
    M = np.array([p, q])
    rhs = 0.5 * np.array([p @ p + 1.0, q @ q + 1.0])
    det = np.linalg.det(M)
    if abs(det) < 1e-14:
        # geodesic through the origin: a diameter
        u = (q - p) if np.linalg.norm(q - p) > 0 else p
        u = u / np.linalg.norm(u)
        ends = [u, -u]
    else:
        c = np.linalg.solve(M, rhs)
        c2 = c @ c
        foot = c / c2
        perp = np.array([-c[1], c[0]]) / math.sqrt(c2)
        s = math.sqrt(max(0.0, 1.0 - 1.0 / c2))
        ends = [foot + s * perp, foot - s * perp]
    ends.sort(key=lambda a: np.linalg.norm(a - p) - np.linalg.norm(a - q))
    to3 = lambda a: a[0] * e1 + a[1] * e2
    return to3(ends[0]), to3(ends[1])


def cross_ratio_distance(P, Q):
    """Hyperbolic distance as log(|AQ||BP| / (|AP||BQ|)) for geodesic endpoints A, B."""
    P, Q = _as_points(P), _as_points(Q)
    _check_interior(P, Q)
    if np.allclose(P, Q, rtol=0, atol=0):
        return 0.0
    A, B = geodesic_endpoints(P, Q)
    n = np.linalg.norm
    return float(math.log((n(A - Q) * n(B - P)) / (n(A - P) * n(B - Q))))


# --- rays and horoballs -------------------------------------------------------

def _unit(z):
    z = _as_points(z)
    nz = np.linalg.norm(z)
    if abs(nz - 1.0) > BOUNDARY_TOL:
        raise GeometryError(f"boundary point must have norm 1, got {nz!r}")
    return z / nz


def ray_point(z, T):
    """Point on the ray from 0 to boundary point z at hyperbolic distance T from 0."""
    z = _unit(z)
    if T < 0:
        raise GeometryError("T must be nonnegative")
    return math.tanh(T / 2.0) * z


@dataclass(frozen=True)
class GeodesicRayPoint:
    endpoint: np.ndarray
    T: float

    @property
    def point(self):
        return ray_point(self.endpoint, self.T)


@dataclass(frozen=True)
class Horoball:
    """Euclidean ball internally tangent to the unit sphere at ``basepoint``."""

    basepoint: np.ndarray
    diameter: float
    rank: int = 1

    def __post_init__(self):
        object.__setattr__(self, "basepoint", _unit(self.basepoint))
        if not 0 < self.diameter <= 2:
            raise GeometryError("horoball diameter must lie in (0, 2]")
        if int(self.rank) != self.rank or self.rank < 1:
            raise GeometryError("horoball rank must be a positive integer")

    @property
    def center(self):
        return self.basepoint * (1.0 - self.diameter / 2.0)

    @property
    def radius(self):
        return self.diameter / 2.0

    @property
    def tip(self):
        """Point of the horosphere nearest the origin."""
        return self.basepoint * (1.0 - self.diameter)

    def contains(self, x, tol=0.0):
        return bool(np.linalg.norm(_as_points(x) - self.center) <= self.radius + tol)

    def busemann_depth(self, x):
        """Signed hyperbolic distance from x to the horosphere (positive inside)."""
        x = _as_points(x)
        inside = (1 - x @ x) / np.sum((x - self.basepoint) ** 2)
        level = (2 - self.diameter) / self.diameter
        return float(math.log(inside) - math.log(level))


def horoball_through(basepoint, x):
    """Diameter of the horoball at ``basepoint`` whose horosphere passes through x."""
    x = _as_points(x)
    b = (1 - x @ x) / np.sum((x - basepoint) ** 2)
    return 2.0 / (1.0 + b)


def check_disjoint(horoballs: Sequence[Horoball], slack=DISJOINT_SLACK):
    for i, a in enumerate(horoballs):
        for b in horoballs[i + 1:]:
            gap = np.linalg.norm(a.center - b.center) - (a.radius + b.radius)
            if gap < -slack:
                raise GeometryError(
                    f"horoballs at {a.basepoint.tolist()} and {b.basepoint.tolist()} overlap"
                )


def golden_section_min(f, a, b, tol=GOLDEN_TOL, max_iter=200):
    """Minimise a unimodal function on [a, b]; returns (argmin, min)."""
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def distance_to_horosphere(x, ball: Horoball, tol=GOLDEN_TOL):
    """Hyperbolic distance from an interior point of ``ball`` to its boundary.

    Minimises the distance over the horocycle cut out by the plane through
    the basepoint, the horoball centre and x.
    """
    x = _as_points(x)
    c, rad, p = ball.center, ball.radius, ball.basepoint
    e1 = -p
    rest = (x - c) - np.dot(x - c, e1) * e1
    if np.linalg.norm(rest) > 1e-15:
        e2 = rest / np.linalg.norm(rest)
    else:
        e2 = _plane_basis(e1, e1)[1]

    def on_circle(phi):
        return c + rad * (math.cos(phi) * e1 + math.sin(phi) * e2)

    def dist(phi):
        y = on_circle(phi)
        y2 = y @ y
        if y2 >= 1.0:
            return math.inf
        return hyperbolic_distance(x, y)

    # phi = 0 is the tip, phi = +-pi the tangency point at infinite distance
    eps = 1e-9
    _, val = golden_section_min(dist, -math.pi + eps, math.pi - eps, tol=tol)
    return float(val)


def escape_function(z, T, horoballs: Sequence[Horoball]):
    """(rho, k): depth of z_T inside the horoball containing it, and its rank."""
    for hb in horoballs:
        if hb.contains(np.zeros_like(hb.basepoint)):
            raise GeometryError("horoballs must not contain the origin")
    # A ray ending at a basepoint meets its horosphere orthogonally, so the
    # depth is exact; this also avoids ray points rounding onto the sphere.
    zu = _unit(z)
    for hb in horoballs:
        if np.linalg.norm(zu - hb.basepoint) <= 1e-14:
            return max(0.0, float(T) - math.log((2.0 - hb.diameter) / hb.diameter)), int(hb.rank)
    x = ray_point(z, T)
    for hb in horoballs:
        if hb.contains(x, tol=1e-15):
            if abs(np.linalg.norm(x - hb.center) - hb.radius) <= 1e-15:
                return 0.0, int(hb.rank)
            return distance_to_horosphere(x, hb), int(hb.rank)
    return 0.0, 0


# --- models -------------------------------------------------------------------

def cayley_transform(x):
    """Upper half-space -> Poincare ball; the point at height 1 over 0 goes to 0."""
    x = _as_points(x)
    if np.any(x[..., -1] <= 0):
        raise GeometryError("use cayley_boundary for points on the boundary")
    return _cayley(x)


def _cayley(x):
    xp, t = x[..., :-1], x[..., -1]
    n2 = np.sum(xp * xp, axis=-1)
    denom = n2 + (1 + t) ** 2
    top = np.sum(x * x, axis=-1) - 1
    out = np.concatenate([2 * xp, top[..., None]], axis=-1) / denom[..., None]
    return out


def inverse_cayley_transform(y):
    """Poincare ball -> upper half-space."""
    y = _as_points(y)
    n2 = np.sum(y * y, axis=-1)
    if np.any(n2 >= 1):
        raise GeometryError("inverse Cayley transform needs interior points")
    return _inverse_cayley(y)


def _inverse_cayley(y):
    yp, s = y[..., :-1], y[..., -1]
    denom = np.sum(yp * yp, axis=-1) + (1 - s) ** 2
    if np.any(denom <= 0):
        raise GeometryError("the image of infinity has no finite preimage")
    top = 1 - np.sum(y * y, axis=-1)
    return np.concatenate([2 * yp, top[..., None]], axis=-1) / denom[..., None]


def infinity_image(dim=3):
    """Boundary point of the ball corresponding to infinity in half-space."""
    e = np.zeros(dim)
    e[-1] = 1.0
    return e


def cayley_boundary(xp):
    """Boundary R^{n-1} -> unit sphere (height-zero case of the Cayley transform)."""
    xp = _as_points(xp)
    x = np.concatenate([xp, np.zeros(xp.shape[:-1] + (1,))], axis=-1)
    return _cayley(x)


def inverse_cayley_boundary(y):
    y = _as_points(y)
    if np.any(np.all(np.isclose(y, infinity_image(y.shape[-1]), rtol=0, atol=1e-15), axis=-1)):
        raise GeometryError("the image of infinity has no finite preimage")
    return _inverse_cayley(y)[..., :-1]


# --- Mobius maps --------------------------------------------------------------

@dataclass(frozen=True)
class MobiusMap:
    """z -> (a z + b)/(c z + d) with ad - bc = 1."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det) < 1e-300:
            raise GeometryError("singular Mobius matrix")
        if abs(det - 1) > 1e-12:
            s = np.sqrt(complex(det))
            for k in "abcd":
                object.__setattr__(self, k, complex(getattr(self, k)) / s)
        else:
            for k in "abcd":
                object.__setattr__(self, k, complex(getattr(self, k)))

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=complex)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def from_flat(cls, v):
        """From [a_re, a_im, b_re, b_im, c_re, c_im, d_re, d_im]."""
        if len(v) != 8:
            raise GeometryError("generator needs 8 real numbers")
        return cls(complex(v[0], v[1]), complex(v[2], v[3]), complex(v[4], v[5]), complex(v[6], v[7]))

    @property
    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @property
    def trace(self):
        return self.a + self.d

    def flat(self):
        return [x for z in (self.a, self.b, self.c, self.d) for x in (z.real, z.imag)]

    def __matmul__(self, other):
        return MobiusMap.from_matrix(self.matrix @ other.matrix)

    def inverse(self):
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def power(self, n):
        return MobiusMap.from_matrix(np.linalg.matrix_power(self.matrix, n))

    @property
    def is_real(self):
        return all(abs(z.imag) < 1e-14 for z in (self.a, self.b, self.c, self.d))

    @property
    def is_parabolic(self):
        tr = self.trace
        near_two = min(abs(tr - 2), abs(tr + 2)) < PARABOLIC_TOL
        identity = abs(self.b) < PARABOLIC_TOL and abs(self.c) < PARABOLIC_TOL
        return near_two and not identity

    def fixed_points(self):
        """Fixed points on the Riemann sphere (None stands for infinity)."""
        a, b, c, d = self.a, self.b, self.c, self.d
        if abs(c) < 1e-15:
            if abs(a - d) < 1e-15:
                return [None]
            return [b / (d - a), None]
        disc = np.sqrt((a - d) ** 2 + 4 * b * c)
        z1 = (a - d + disc) / (2 * c)
        z2 = (a - d - disc) / (2 * c)
        return [z1] if abs(z1 - z2) < 1e-12 else [z1, z2]

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * z + self.b) / (self.c * z + self.d)

    def act_halfspace(self, x):
        """Poincare extension to H^3 (3 coordinates) or H^2 (2 coordinates, real maps)."""
        x = _as_points(x)
        if x.shape[-1] == 2:
            if not self.is_real:
                raise GeometryError("only real Mobius maps act on H^2")
            z = x[..., 0].astype(complex)
        elif x.shape[-1] == 3:
            z = x[..., 0] + 1j * x[..., 1]
        else:
            raise GeometryError("half-space points need 2 or 3 coordinates")
        t = x[..., -1]
        a, b, c, d = self.a, self.b, self.c, self.d
        w = c * z + d
        denom = np.abs(w) ** 2 + np.abs(c) ** 2 * t * t
        num = (a * z + b) * np.conj(w) + a * np.conj(c) * t * t
        zn = num / denom
        tn = t / denom
        if x.shape[-1] == 2:
            return np.stack([zn.real, tn], axis=-1)
        return np.stack([zn.real, zn.imag, tn], axis=-1)

    def act_ball(self, y):
        """Action on the Poincare ball, conjugated through the Cayley transform."""
        y = _as_points(y)
        return cayley_transform(self.act_halfspace(inverse_cayley_transform(y)))

    def act_sphere(self, y):
        """Action on boundary points of the ball (2 or 3 coordinates)."""
        y = _as_points(y)
        single = y.ndim == 1
        y = np.atleast_2d(y)
        dim = y.shape[-1]
        inf = infinity_image(dim)
        at_inf = np.all(np.abs(y - inf) < 1e-15, axis=-1)
        out = np.empty_like(y)
        z = np.zeros(len(y), dtype=complex)
        if np.any(~at_inf):
            xp = inverse_cayley_boundary(y[~at_inf])
            z[~at_inf] = xp[:, 0] + (1j * xp[:, 1] if dim == 3 else 0)
        w_num = self.a * z + self.b
        w_den = self.c * z + self.d
        if np.any(at_inf):
            w_num[at_inf] = self.a
            w_den[at_inf] = self.c
        to_inf = np.abs(w_den) < 1e-300
        w = np.where(to_inf, 0, w_num / np.where(to_inf, 1, w_den))
        coords = np.stack([w.real, w.imag], axis=-1)[:, : dim - 1]
        out[:] = cayley_boundary(coords)
        out[to_inf] = inf
        return out[0] if single else out


def sphere_point(z):
    """Boundary point of the 3-ball for a complex number (None = infinity)."""
    if z is None:
        return infinity_image(3)
    return cayley_boundary(np.array([z.real, z.imag]))


# --- lemma checks -------------------------------------------------------------

@dataclass
class CircleLemmaReport:
    R: float
    angles: np.ndarray
    x: np.ndarray
    y: np.ndarray
    holds: np.ndarray  # (n, 4) booleans for the four inequalities

    @property
    def all_hold(self):
        return bool(np.all(self.holds))

    @property
    def ratio_x_sqrt_ry(self):
        return self.x / np.sqrt(self.R * self.y)

    @property
    def ratio_y_x2_over_r(self):
        return self.y / (self.x ** 2 / self.R)


def circle_lemma_check(R, angles=None, theta_max=0.1):
    """Evaluate the four circle-slice inequalities on a grid of small angles."""
    if R <= 0:
        raise GeometryError("R must be positive")
    if angles is None:
        angles = np.geomspace(1e-6, theta_max, 200)
    th = np.asarray(angles, float)
    if np.any(th <= 0) or np.any(th > theta_max):
        raise GeometryError(f"angles must lie in (0, {theta_max}]")
    x = R * np.sin(th)
    y = 2 * R * np.sin(th / 2) ** 2
    sq = np.sqrt(R * y)
    holds = np.stack([
        sq / 2 <= x,
        x <= 2 * sq,
        x * x / (4 * R) <= y,
        y <= 4 * x * x / R,
    ], axis=-1)
    return CircleLemmaReport(float(R), th, x, y, holds)


@dataclass
class HoroballSequence:
    n: np.ndarray
    distance: np.ndarray  # |f^n(p') - p|
    diameter: np.ndarray  # |H_{f^n(p')}|
    tangency_error: np.ndarray

    def bracket(self, n_lo=10):
        sel = self.n >= n_lo
        r1 = self.n[sel] * self.distance[sel]
        r2 = self.n[sel] ** 2 * self.diameter[sel]
        both = np.concatenate([r1, r2])
        return float(both.min()), float(both.max())

    def within(self, C, n_lo=10):
        lo, hi = self.bracket(n_lo)
        return lo >= 1.0 / C and hi <= C


def horoball_radius_sequence(f: MobiusMap, seed: Horoball, n_max, n_values=None):
    """Images f^n(H_{p'}) of a seed horoball under powers of a parabolic map."""
    if not f.is_parabolic:
        raise GeometryError("horoball_radius_sequence needs a parabolic map")
    fixed = f.fixed_points()[0]
    p = sphere_point(fixed)
    if n_values is None:
        n_values = np.unique(np.geomspace(1, n_max, 400).astype(int))
    n_values = np.asarray(n_values, dtype=int)
    # sample points on the seed horosphere away from its basepoint
    hb = seed
    e1 = -hb.basepoint
    e2 = _plane_basis(e1, e1)[1]
    e3 = np.cross(e1, e2)
    angles = [2.0, 2.5, 3.0 - np.pi, -2.2]
    samples = []
    for k, phi in enumerate(angles):
        dirv = e2 if k % 2 == 0 else e3
        samples.append(hb.center + hb.radius * (math.cos(phi) * e1 + math.sin(phi) * dirv))
    samples = np.array(samples)
    dist, diam, terr = [], [], []
    for n in n_values:
        g = f.power(int(n))
        q = g.act_sphere(hb.basepoint)
        imgs = g.act_ball(samples)
        ds = np.array([horoball_through(q, im) for im in imgs])
        D = float(np.median(ds))
        center = q * (1 - D / 2)
        err = np.max(np.abs(np.linalg.norm(imgs - center, axis=1) - D / 2))
        dist.append(np.linalg.norm(q - p))
        diam.append(D)
        terr.append(err)
    return HoroballSequence(n_values, np.array(dist), np.array(diam), np.array(terr))


# --- configuration files ------------------------------------------------------

@dataclass
class GeometryConfig:
    model: str
    horoballs: list = field(default_factory=list)
    generators: list = field(default_factory=list)


def _halfspace_horoball(spec):
    """Convert a half-space horoball (basepoint in R^2 or 'inf') to the ball model."""
    rank = int(spec.get("rank", 1))
    bp = spec["basepoint"]
    if bp in ("inf", None):
        height = float(spec.get("height", spec.get("diameter")))
        tip = cayley_transform(np.array([0.0, 0.0, height]))
        q = infinity_image(3)
        return Horoball(q, horoball_through(q, tip), rank)
    bp = np.asarray(bp, float)
    D = float(spec["diameter"])
    xp = np.concatenate([bp, np.zeros(2 - len(bp))]) if len(bp) < 2 else bp
    top = cayley_transform(np.array([xp[0], xp[1], D]))
    q = cayley_boundary(xp)
    return Horoball(q, horoball_through(q, top), rank)


def load_geometry_config(source) -> GeometryConfig:
    """Load horoballs and generators from a JSON path, string or mapping."""
    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        data = json.loads(Path(source).read_text())
    elif isinstance(source, str):
        data = json.loads(source)
    else:
        data = dict(source)
    model = data.get("model", "ball")
    if model not in ("ball", "halfspace"):
        raise GeometryError(f"unknown model {model!r}")
    balls = []
    for spec in data.get("horoballs", []):
        if model == "ball":
            balls.append(Horoball(np.asarray(spec["basepoint"], float),
                                  float(spec["diameter"]), int(spec.get("rank", 1))))
        else:
            balls.append(_halfspace_horoball(spec))
    check_disjoint(balls)
    for hb in balls:
        if hb.contains(np.zeros_like(hb.basepoint)):
            raise GeometryError("horoballs must not contain the origin")
    gens = [MobiusMap.from_flat(v) for v in data.get("generators", [])]
    return GeometryConfig(model, balls, gens)
