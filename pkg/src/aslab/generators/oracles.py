"""Measure oracles: synthetic global-measure formulae and an empirical counterpart.

Synthetic oracles are indexed by tags rather than coordinates.  Each tag
carries a geometric itinerary (horoball windows for the Kleinian formula,
hyperbolic zoom radii for the Julia formula) and the oracle evaluates the
formula's right-hand side exactly, with constant 1.

Radii are handled in logarithmic form ``u = -log r`` (``T`` in the Kleinian
notation) because the interesting depths run to the thousands and
``exp(-u)`` underflows long before that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..formulas import JuliaParams, KleinianParams, ParameterError, julia_log_phi, sv_log_global_measure
from .clouds import PointCloud

KINDS = ("synthetic-kleinian", "synthetic-julia", "empirical")
ITINERARY_KINDS = ("none", "parabolic-center", "tent", "dragged")
DEFAULT_DEPTHS = (50.0, 20_000.0)
DEFAULT_GRID_POINTS = 400


class OracleError(ValueError):
    """Invalid itinerary or zoom data, or a query the oracle cannot answer."""


def depth_grid(lo=DEFAULT_DEPTHS[0], hi=DEFAULT_DEPTHS[1], n=DEFAULT_GRID_POINTS):
    """Geometric grid of depths u = -log r."""
    if not 0 < lo < hi:
        raise OracleError("depth grid needs 0 < lo < hi")
    return np.geomspace(lo, hi, int(n))


# --- itineraries --------------------------------------------------------------

@dataclass(frozen=True)
class HoroballItinerary:
    """Horoball windows ``(T_enter, T_exit, k)`` along one geodesic ray.

    Inside a window the escape function is the tent
    ``min(T - T_enter, T_exit - T)``; ``T_exit = inf`` gives the
    parabolic-centre ramp ``T - T_enter``.  Outside every window it is 0.
    """

    windows: tuple = ()
    kind: str = "none"
    name: str = ""

    def __post_init__(self):
        if self.kind not in ITINERARY_KINDS:
            raise OracleError(f"unknown itinerary kind {self.kind!r}")
        wins = tuple((float(a), float(b), int(k)) for a, b, k in self.windows)
        prev = -math.inf
        for a, b, k in wins:
            if not a >= 0:
                raise OracleError("windows must start at T >= 0")
            if not b > a:
                raise OracleError("every window needs T_exit > T_enter")
            if a < prev:
                raise OracleError("windows must be disjoint and increasing")
            prev = b
        object.__setattr__(self, "windows", wins)

    def ranks(self):
        return {k for _, _, k in self.windows}

    def escape(self, T):
        """(rho(T), k(T)) arrays; k is 0 where rho vanishes."""
        T = np.asarray(T, float)
        rho = np.zeros(T.shape)
        k = np.zeros(T.shape)
        for a, b, rank in self.windows:
            inside = (T >= a) & (T <= b)
            rho = np.where(inside, np.minimum(T - a, b - T), rho)
            k = np.where(inside, rank, k)
        return rho, k


def no_horoballs():
    return HoroballItinerary((), "none", "none")


def parabolic_center(k, start=0.0):
    return HoroballItinerary(((start, math.inf, k),), "parabolic-center", f"parabolic-center:k={k}")


def tent(k, t_enter, t_exit):
    return HoroballItinerary(((t_enter, t_exit, k),), "tent", f"tent:k={k}:T={t_exit:.6g}")


def dragged(k_first, k_second, switch):
    """A rank-``k_first`` horoball left at ``switch``, then a deep rank-``k_second`` one."""
    return HoroballItinerary(((0.0, switch, k_first), (switch, math.inf, k_second)), "dragged",
                             f"dragged:k={k_first}>{k_second}:X={switch:.6g}")


def kleinian_itinerary_presets(k_min, k_max, depths=None):
    """The extremal itineraries: none, parabolic centres, tents and dragged pairs.

    Tents enter at depth 0 and exit at a grid depth; dragged itineraries
    switch from one rank to the other at a grid depth.  Together they reach
    every branch of the Patterson-Sullivan spectra at the grid depths.
    """
    depths = depth_grid() if depths is None else np.asarray(depths, float)
    ranks = sorted({int(k_min), int(k_max)})
    out = [no_horoballs()]
    out += [parabolic_center(k) for k in ranks]
    out += [tent(k, 0.0, t) for k in ranks for t in depths]
    if k_min != k_max:
        out += [dragged(k_max, k_min, x) for x in depths]
        out += [dragged(k_min, k_max, x) for x in depths]
    return out


# --- zooms --------------------------------------------------------------------

@dataclass(frozen=True)
class ZoomSequence:
    """Hyperbolic zoom radii r_1 > r_2 > ... stored as depths u_j = -log r_j.

    ``petals[j]`` is the petal number governing the window from r_j to
    r_(j+1); a terminating (pre-parabolic) sequence carries one extra petal
    number for the tail below its last radius.
    """

    log_radii: tuple
    petals: tuple
    terminating: bool = False
    name: str = ""

    def __post_init__(self):
        u = tuple(float(x) for x in self.log_radii)
        p = tuple(int(x) for x in self.petals)
        if not u:
            raise OracleError("a zoom sequence needs at least one radius")
        if any(x < 0 for x in u):
            raise OracleError("zoom radii must not exceed 1")
        if any(b <= a for a, b in zip(u, u[1:])):
            raise OracleError("zoom radii must decrease strictly")
        need = len(u) - 1 + (1 if self.terminating else 0)
        if len(p) != need:
            raise OracleError(f"expected {need} petal numbers, got {len(p)}")
        if any(x < 1 for x in p):
            raise OracleError("petal numbers must be positive")
        object.__setattr__(self, "log_radii", u)
        object.__setattr__(self, "petals", p)

    @classmethod
    def from_radii(cls, radii, petals, terminating=False, name=""):
        r = np.asarray(radii, float)
        if np.any(r <= 0):
            raise OracleError("zoom radii must be positive")
        return cls(tuple(-np.log(r)), tuple(petals), terminating, name)

    @property
    def radii(self):
        return tuple(math.exp(-u) for u in self.log_radii)

    @property
    def depth_range(self):
        return self.log_radii[0], (math.inf if self.terminating else self.log_radii[-1])

    def log_phi(self, h, u):
        """log phi(xi, e^-u); nan outside the sequence's range."""
        u = np.asarray(u, float)
        out = np.full(u.shape, np.nan)
        lr = np.asarray(self.log_radii)
        if len(lr) > 1:
            inside = (u >= lr[0]) & (u <= lr[-1])
            j = np.clip(np.searchsorted(lr, u[inside], side="right") - 1, 0, len(lr) - 2)
            out[inside] = julia_log_phi(h, np.asarray(self.petals)[j], u[inside], lr[j], lr[j + 1])
        if self.terminating:
            tail = u >= lr[-1]
            out[tail] = -(h - 1) * self.petals[-1] * (u[tail] - lr[-1])
        return out


def geometric_zoom(lam, p, u_max):
    step = -math.log(lam)
    n = int(u_max / step) + 2
    return ZoomSequence(tuple(step * np.arange(n)), (p,) * (n - 1), False, f"geometric:lambda={lam}")


def doubly_exponential_zoom(beta, p, u_max):
    n = int(math.log(u_max) / math.log(beta)) + 3
    return ZoomSequence(tuple(beta ** np.arange(n)), (p,) * (n - 1), False, f"doubly-exponential:beta={beta}")


def terminating_zoom(p, u_last=0.0):
    return ZoomSequence((u_last,), (p,), True, f"terminating:p={p}")


def excursion_zoom(p, depth):
    """One long window from radius 1 down to e^-depth."""
    return ZoomSequence((0.0, float(depth)), (p,), False, f"excursion:p={p}:u={depth:.6g}")


def julia_zoom_presets(p_max, depths=None):
    """Geometric (0.5, 0.1) and doubly-exponential (1.5, 2) zooms, a terminating
    sequence and the single-window excursions ending at each grid depth."""
    depths = depth_grid() if depths is None else np.asarray(depths, float)
    u_max = float(depths.max())
    out = [geometric_zoom(lam, p_max, u_max) for lam in (0.5, 0.1)]
    out += [doubly_exponential_zoom(beta, p_max, u_max) for beta in (1.5, 2.0)]
    out += [terminating_zoom(p_max)]
    out += [excursion_zoom(p_max, u) for u in depths]
    return out


# --- oracles ------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureOracle:
    """Queryable ball masses.  ``log_mass(tag, u)`` is log m(B(tag, e^-u)).

    ``tags`` lists the admissible centers.  ``depth_range`` is the range of
    u where queries are answered; a tag may have a narrower range of its own
    (see :meth:`valid`).
    """

    kind: str
    params: object
    tags: tuple
    depth_range: tuple
    _evaluate: object = field(repr=False, compare=False, default=None)
    _valid: object = field(repr=False, compare=False, default=None)
    info: dict = field(default_factory=dict, compare=False)
    _matrix: object = field(repr=False, compare=False, default=None)
    _cache: dict = field(repr=False, compare=False, default_factory=dict)

    def _check(self, u):
        u = np.asarray(u, float)
        lo, hi = self.depth_range
        if np.any(u < lo - 1e-12) or np.any(u > hi + 1e-12):
            raise OracleError(f"depth outside the oracle range [{lo:.4g}, {hi:.4g}]")
        return u

    def log_mass(self, tag, u):
        u = self._check(u)
        out = self._evaluate(tag, u)
        return float(out) if np.ndim(out) == 0 else out

    def mass(self, tag, r):
        """m(B(tag, r)); underflows to 0 for very small r (use :meth:`log_mass`)."""
        r = np.asarray(r, float)
        if np.any(r <= 0):
            raise OracleError("radius must be positive")
        return np.exp(self.log_mass(tag, -np.log(r)))

    def valid(self, tag, u):
        u = np.asarray(u, float)
        return self._valid(tag, u) if self._valid else np.ones(u.shape, bool)

    def log_mass_matrix(self, tags, u):
        """Array (len(tags), len(u)) of log masses; nan where a tag is not valid."""
        u = self._check(u)
        if self._matrix is not None:
            tags = list(tags)
            key = (tuple(tags), u.tobytes())
            if key not in self._cache:
                if len(self._cache) > 64:
                    self._cache.clear()
                self._cache[key] = self._matrix(tags, u)
            return self._cache[key]
        rows = []
        for t in tags:
            row = np.asarray(self._evaluate(t, u), float)
            rows.append(np.where(self.valid(t, u), row, np.nan))
        return np.array(rows).reshape(len(tags), len(u))


def synthetic_kleinian_measure(delta, k_min, k_max, itineraries=None, depths=None) -> MeasureOracle:
    """Patterson-Sullivan surrogate: log m = -T delta - rho(T)(delta - k(T)), capped at 0."""
    params = KleinianParams(delta, k_min, k_max)
    if not delta > k_max / 2:
        raise ParameterError("the measure formula needs delta > k_max/2")
    its = kleinian_itinerary_presets(k_min, k_max, depths) if itineraries is None else list(itineraries)
    table = {}
    for it in its:
        if not isinstance(it, HoroballItinerary):
            raise OracleError("itineraries must be HoroballItinerary instances")
        bad = [k for k in it.ranks() if not k_min <= k <= k_max]
        if bad:
            raise OracleError(f"{it.name}: ranks {bad} outside [{k_min}, {k_max}]")
        # log-slopes per unit depth are -delta -/+ (delta - k); both must be <= 0
        for k in it.ranks():
            if 2 * delta - k < 0 or k < 0:
                raise OracleError(f"{it.name}: rank {k} makes the mass increase as the ball shrinks")
        name = it.name or f"itinerary{len(table)}"
        if name in table:
            raise OracleError(f"duplicate itinerary tag {name!r}")
        table[name] = it

    def evaluate(tag, T):
        try:
            it = table[tag]
        except KeyError:
            raise OracleError(f"unknown tag {tag!r}") from None
        rho, k = it.escape(T)
        return np.minimum(0.0, sv_log_global_measure(delta, k, T, rho))

    # padded window arrays so that many tags are evaluated in one broadcast
    names = list(table)
    index = {n: i for i, n in enumerate(names)}
    width = max([1] + [len(it.windows) for it in table.values()])
    wins = np.zeros((len(names), width, 3))
    wins[:, :, :2] = -1.0  # empty slot: a window no depth falls into
    for i, n in enumerate(names):
        for j, w in enumerate(table[n].windows):
            wins[i, j] = w

    def matrix(tags, T):
        try:
            rows = np.array([index[t] for t in tags], dtype=int)
        except KeyError as exc:
            raise OracleError(f"unknown tag {exc.args[0]!r}") from None
        a, b, rank = (wins[rows, :, c][:, :, None] for c in range(3))
        inside = (T >= a) & (T <= b)
        rho = np.where(inside, np.minimum(T - a, b - T), 0.0).sum(axis=1)
        k = np.where(inside, rank, 0.0).max(axis=1)
        return np.minimum(0.0, sv_log_global_measure(delta, k, T, rho))

    return MeasureOracle("synthetic-kleinian", params, tuple(names), (0.0, math.inf), evaluate,
                         info={"itineraries": table}, _matrix=matrix)


def synthetic_julia_measure(h, p_max, zooms=None, depths=None, p_min=1) -> MeasureOracle:
    """Conformal-measure surrogate: log m = -h u + log phi(u), capped at 0."""
    params = JuliaParams(h, p_max, p_min)
    if not h > p_max / (1 + p_max):
        raise ParameterError("the measure formula needs h > p_max/(1+p_max)")
    zs = julia_zoom_presets(p_max, depths) if zooms is None else list(zooms)
    table = {}
    for z in zs:
        if not isinstance(z, ZoomSequence):
            raise OracleError("zooms must be ZoomSequence instances")
        if any(not p_min <= p <= p_max for p in z.petals):
            raise OracleError(f"{z.name}: petal numbers outside [{p_min}, {p_max}]")
        name = z.name or f"zoom{len(table)}"
        if name in table:
            raise OracleError(f"duplicate zoom tag {name!r}")
        table[name] = z

    def zoom(tag):
        try:
            return table[tag]
        except KeyError:
            raise OracleError(f"unknown tag {tag!r}") from None

    def evaluate(tag, u):
        # log_phi is nan outside the zoom's range and np.minimum keeps the nan
        return np.minimum(0.0, -h * u + zoom(tag).log_phi(h, u))

    def valid(tag, u):
        lo, hi = zoom(tag).depth_range
        return (u >= lo) & (u <= hi)

    def matrix(tags, u):
        # evaluate() is nan outside each zoom's range, which is what the matrix needs
        return np.array([evaluate(t, u) for t in tags]).reshape(len(tags), len(u))

    return MeasureOracle("synthetic-julia", params, tuple(table), (0.0, math.inf), evaluate, valid,
                         info={"zooms": table}, _matrix=matrix)


def empirical_measure(cloud: PointCloud, weights=None, safety=8.0) -> MeasureOracle:
    """Normalised (weighted) point counts in balls around cloud points.

    Tags are indices into ``cloud.points``; the depth range runs from the
    cloud diameter down to ``safety * eps_min``.
    """
    pts = cloud.points
    w = np.ones(len(pts)) if weights is None else np.asarray(weights, float)
    if w.shape != (len(pts),) or np.any(w < 0) or not w.sum() > 0:
        raise OracleError("weights must be non-negative, one per point, with positive sum")
    w = w / w.sum()
    tree = cKDTree(pts)
    diam = cloud.diameter if cloud.diameter > 0 else 1.0
    rng_u = (-math.log(diam), -math.log(safety * cloud.eps_min))
    if rng_u[0] >= rng_u[1]:
        raise OracleError("cloud resolution leaves no admissible radii")

    def evaluate(tag, u):
        x = pts[int(tag)]
        r = np.exp(-np.asarray(u, float))
        out = np.empty(r.shape)
        for i, ri in np.ndenumerate(r):
            idx = tree.query_ball_point(x, ri)
            out[i] = w[idx].sum()
        with np.errstate(divide="ignore"):
            return np.log(out)

    return MeasureOracle("empirical", {"n": len(pts), "eps_min": cloud.eps_min}, tuple(range(len(pts))),
                         rng_u, evaluate)
