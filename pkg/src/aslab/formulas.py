"""Closed-form dimensions and dimension spectra.

Kleinian limit sets L and Patterson-Sullivan measures mu are parametrised by
the Poincare exponent ``delta`` and the minimal/maximal parabolic ranks.
Parabolic Julia sets J and h-conformal measures m are parametrised by the
critical exponent ``h`` and the maximal petal number.

All spectra are evaluated on the open interval (0, 1); the theta -> 0 and
theta -> 1 limits are exposed as attributes of :class:`SpectrumProfile`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

ASSOUAD = "assouad"
LOWER = "lower"
MODES = (ASSOUAD, LOWER)


class ParameterError(ValueError):
    """Raised when dimension parameters violate the standing bounds."""


def _check_int(name, value):
    if isinstance(value, bool) or not float(value).is_integer():
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    if int(value) < 1:
        raise ParameterError(f"{name} must be positive, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class KleinianParams:
    delta: float
    k_min: int
    k_max: int

    def __post_init__(self):
        object.__setattr__(self, "k_min", _check_int("k_min", self.k_min))
        object.__setattr__(self, "k_max", _check_int("k_max", self.k_max))
        object.__setattr__(self, "delta", float(self.delta))
        if self.k_min > self.k_max:
            raise ParameterError(f"k_min={self.k_min} exceeds k_max={self.k_max}")
        if not math.isfinite(self.delta) or self.delta <= self.k_max / 2:
            raise ParameterError(
                f"delta > k_max/2 violated: delta={self.delta}, k_max={self.k_max}"
            )


@dataclass(frozen=True)
class JuliaParams:
    h: float
    p_max: int
    p_min: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "p_max", _check_int("p_max", self.p_max))
        p_min = self.p_max if self.p_min is None else _check_int("p_min", self.p_min)
        object.__setattr__(self, "p_min", p_min)
        object.__setattr__(self, "h", float(self.h))
        if p_min > self.p_max:
            raise ParameterError(f"p_min={p_min} exceeds p_max={self.p_max}")
        bound = self.p_max / (1 + self.p_max)
        if not math.isfinite(self.h) or self.h <= bound:
            raise ParameterError(
                f"h > p_max/(1+p_max) violated: h={self.h}, p_max/(1+p_max)={bound:.6g}"
            )
        if self.h >= 2:
            raise ParameterError(f"h < 2 violated: h={self.h}")


def params_from_dict(d: dict):
    """Build Kleinian or Julia parameters from a JSON-style mapping."""
    kind = d.get("kind")
    if kind is None:
        kind = "kleinian" if "delta" in d else "julia" if "h" in d else None
    if kind == "kleinian":
        k = d.get("k")
        return KleinianParams(d["delta"], d.get("k_min", k), d.get("k_max", k))
    if kind == "julia":
        return JuliaParams(d["h"], d["p_max"], d.get("p_min"))
    raise ParameterError(f"cannot infer parameter kind from keys {sorted(d)}")


def params_to_dict(params) -> dict:
    if isinstance(params, KleinianParams):
        return {"kind": "kleinian", "delta": params.delta,
                "k_min": params.k_min, "k_max": params.k_max}
    return {"kind": "julia", "h": params.h, "p_min": params.p_min, "p_max": params.p_max}


def kleinian_weight(theta):
    """min{1, theta/(1-theta)}."""
    theta = np.asarray(theta, dtype=float)
    return np.minimum(1.0, theta / (1.0 - theta))


def julia_weight(theta, p_max):
    """min{1, theta p_max/(1-theta)}."""
    theta = np.asarray(theta, dtype=float)
    return np.minimum(1.0, theta * p_max / (1.0 - theta))


def _check_theta(theta):
    t = np.asarray(theta, dtype=float)
    if t.size == 0:
        return t
    lo, hi = (float(t), float(t)) if t.ndim == 0 else (t.min(), t.max())
    if not (lo > 0 and hi < 1):  # NaN fails both comparisons
        raise ValueError("theta must lie in the open interval (0, 1)")
    return t


@dataclass(frozen=True)
class SpectrumProfile:
    """A spectrum theta -> value together with its endpoint dimensions.

    ``box``, ``assouad`` and ``lower`` are the dimensions of the underlying
    object; ``limit_zero``/``limit_one`` are the theta -> 0 and theta -> 1
    limits of this particular profile.  ``phase_transition`` is ``None`` for
    constant profiles.
    """

    name: str
    mode: str
    evaluator: Callable = field(repr=False, compare=False)
    box: float
    assouad: float
    lower: float
    limit_zero: float
    limit_one: float
    phase_transition: Optional[float]

    def __call__(self, theta):
        t = _check_theta(theta)
        out = np.asarray(self.evaluator(t), dtype=float)
        if out.shape != t.shape:
            out = np.broadcast_to(out, t.shape).copy()
        return float(out) if out.ndim == 0 else out

    @property
    def is_constant(self):
        return self.phase_transition is None


def _profile(name, mode, base, target, weight, rho, box, assouad, lower):
    """Profile of the form base + weight(theta) * (target - base)."""
    if math.isclose(base, target, rel_tol=0, abs_tol=1e-15):
        ev = lambda t, v=base: np.full(np.shape(t), v)
        return SpectrumProfile(name, mode, ev, box, assouad, lower, base, base, None)
    ev = lambda t: base + weight(t) * (target - base)
    return SpectrumProfile(name, mode, ev, box, assouad, lower, base, target, rho)


def _constant(name, mode, value, box, assouad, lower):
    ev = lambda t, v=value: np.full(np.shape(t), v)
    return SpectrumProfile(name, mode, ev, box, assouad, lower, value, value, None)


# --- Kleinian -----------------------------------------------------------------

def kleinian_dims(params: KleinianParams) -> dict:
    d, kmin, kmax = params.delta, params.k_min, params.k_max
    return {
        "assouad_set": max(d, kmax),
        "lower_set": min(d, kmin),
        "assouad_measure": max(2 * d - kmin, kmax),
        "lower_measure": min(2 * d - kmax, kmin),
        "hausdorff": d,
        "box_set": d,
        "box_measure": kleinian_measure_box(params),
    }


def kleinian_measure_box(params: KleinianParams) -> float:
    return max(params.delta, 2 * params.delta - params.k_min)


def kleinian_measure_spectrum(params: KleinianParams, mode: str = ASSOUAD) -> SpectrumProfile:
    d, kmin, kmax = params.delta, params.k_min, params.k_max
    dims = kleinian_dims(params)
    box, A, L = dims["box_measure"], dims["assouad_measure"], dims["lower_measure"]
    name = f"measure-{mode}"
    if mode == ASSOUAD:
        if d < kmin:
            return _profile(name, mode, d, kmax, kleinian_weight, 0.5, box, A, L)
        if d < (kmin + kmax) / 2:
            # 2d - kmin + w (kmin + kmax - 2d)
            return _profile(name, mode, 2 * d - kmin, kmax, kleinian_weight, 0.5, box, A, L)
        return _constant(name, mode, 2 * d - kmin, box, A, L)
    if mode == LOWER:
        if d > kmax:
            return _profile(name, mode, d, kmin, kleinian_weight, 0.5, box, A, L)
        if d > (kmin + kmax) / 2:
            return _profile(name, mode, 2 * d - kmax, kmin, kleinian_weight, 0.5, box, A, L)
        return _constant(name, mode, 2 * d - kmax, box, A, L)
    raise ValueError(f"unknown mode {mode!r}")


def kleinian_set_spectrum(params: KleinianParams, mode: str = ASSOUAD) -> SpectrumProfile:
    d, kmin, kmax = params.delta, params.k_min, params.k_max
    dims = kleinian_dims(params)
    box, A, L = d, dims["assouad_set"], dims["lower_set"]
    name = f"set-{mode}"
    if mode == ASSOUAD:
        if d < kmax:
            return _profile(name, mode, d, kmax, kleinian_weight, 0.5, box, A, L)
        return _constant(name, mode, d, box, A, L)
    if mode == LOWER:
        if d > kmin:
            return _profile(name, mode, d, kmin, kleinian_weight, 0.5, box, A, L)
        return _constant(name, mode, d, box, A, L)
    raise ValueError(f"unknown mode {mode!r}")


# --- Julia --------------------------------------------------------------------

def julia_dims(params: JuliaParams) -> dict:
    h, p = params.h, params.p_max
    tip = h + (h - 1) * p
    return {
        "assouad_set": max(1.0, h),
        "lower_set": min(1.0, h),
        "assouad_measure": max(1.0, tip),
        "lower_measure": min(1.0, tip),
        "box_measure": max(h, tip),
        "box_set": h,
        "hausdorff": h,
    }


def _jweight(p_max):
    return lambda t: julia_weight(t, p_max)


def julia_measure_spectrum(params: JuliaParams, mode: str = ASSOUAD) -> SpectrumProfile:
    h, p = params.h, params.p_max
    dims = julia_dims(params)
    box, A, L = dims["box_measure"], dims["assouad_measure"], dims["lower_measure"]
    rho = 1.0 / (1 + p)
    tip = h + (h - 1) * p
    name = f"measure-{mode}"
    if mode == ASSOUAD:
        if h < 1:
            return _profile(name, mode, h, 1.0, _jweight(p), rho, box, A, L)
        return _constant(name, mode, tip, box, A, L)
    if mode == LOWER:
        if h < 1:
            return _constant(name, mode, tip, box, A, L)
        return _profile(name, mode, h, 1.0, _jweight(p), rho, box, A, L)
    raise ValueError(f"unknown mode {mode!r}")


def julia_set_spectrum(params: JuliaParams, mode: str = ASSOUAD) -> SpectrumProfile:
    h, p = params.h, params.p_max
    dims = julia_dims(params)
    box, A, L = h, dims["assouad_set"], dims["lower_set"]
    rho = 1.0 / (1 + p)
    name = f"set-{mode}"
    if mode == ASSOUAD:
        if h < 1:
            return _profile(name, mode, h, 1.0, _jweight(p), rho, box, A, L)
        return _constant(name, mode, h, box, A, L)
    if mode == LOWER:
        if h < 1:
            return _constant(name, mode, h, box, A, L)
        return _profile(name, mode, h, 1.0, _jweight(p), rho, box, A, L)
    raise ValueError(f"unknown mode {mode!r}")


# --- model sets ---------------------------------------------------------------

def lattice_set_spectrum(k) -> SpectrumProfile:
    """Assouad spectrum of an inverted Z^k lattice: min{k, k/(2(1-theta))}."""
    k = _check_int("k", k)
    if k < 1:
        raise ParameterError("lattice rank must be at least 1")
    ev = lambda t: np.minimum(k, k / (2.0 * (1.0 - t)))
    return SpectrumProfile("set-assouad", ASSOUAD, ev, k / 2.0, float(k), 0.0, k / 2.0, float(k), 0.5)


def sequence_set_spectrum(p) -> SpectrumProfile:
    """Assouad spectrum of {n^(-1/p)}: min{1, p/((1+p)(1-theta))}."""
    if not p > 0:
        raise ParameterError("p must be positive")
    box = p / (1.0 + p)
    ev = lambda t: np.minimum(1.0, box / (1.0 - t))
    return SpectrumProfile("set-assouad", ASSOUAD, ev, box, 1.0, 0.0, box, 1.0, 1.0 / (1.0 + p))


def spectra(params) -> dict:
    """All four spectrum profiles keyed by CSV column name."""
    if isinstance(params, KleinianParams):
        fs, fm = kleinian_set_spectrum, kleinian_measure_spectrum
    elif isinstance(params, JuliaParams):
        fs, fm = julia_set_spectrum, julia_measure_spectrum
    else:
        raise TypeError(f"unsupported parameter type {type(params).__name__}")
    return {
        "set_assouad": fs(params, ASSOUAD),
        "set_lower": fs(params, LOWER),
        "measure_assouad": fm(params, ASSOUAD),
        "measure_lower": fm(params, LOWER),
    }


def dims(params) -> dict:
    if isinstance(params, KleinianParams):
        return kleinian_dims(params)
    return julia_dims(params)


# --- general bounds -----------------------------------------------------------

def general_spectrum_bounds(box_upper, assouad, theta):
    """Interval [box, min{assouad, box/(1-theta)}] containing the Assouad spectrum."""
    t = _check_theta(theta)
    upper = np.minimum(assouad, box_upper / (1.0 - t))
    if np.ndim(upper) == 0:
        return float(box_upper), float(upper)
    return np.full_like(upper, box_upper), upper


def phase_transition_form(box, assouad, rho, theta):
    """min{box + ((1-rho) theta / ((1-theta) rho)) (assouad - box), assouad}."""
    t = _check_theta(theta)
    if not 0 < rho <= 1:
        raise ValueError("phase transition must lie in (0, 1]")
    val = np.minimum(box + ((1 - rho) * t / ((1 - t) * rho)) * (assouad - box), assouad)
    return float(val) if np.ndim(val) == 0 else val


def phase_transition_lower_bound(box, assouad):
    """The bound rho >= 1 - box/assouad implied by the general spectrum bounds."""
    return 1.0 - box / assouad


# --- global measure formulae --------------------------------------------------

def sv_log_global_measure(delta, k, T, rho):
    """log of exp(-T delta) exp(-rho (delta - k))."""
    return -np.asarray(T, float) * delta - np.asarray(rho, float) * (delta - np.asarray(k, float))


def sv_global_measure(delta, k, T, rho):
    """Measure of the ball of radius exp(-T), constant 1."""
    val = np.exp(sv_log_global_measure(delta, k, T, rho))
    return float(val) if np.ndim(val) == 0 else val


def julia_phi_threshold(p, r_j, r_j1):
    """Radius at which the two branches of phi meet inside a zoom window."""
    return r_j * (r_j1 / r_j) ** (1.0 / (1 + p))


def julia_log_phi(h, p, u, u_j, u_j1):
    """log phi in logarithmic radius u = -log r, for u_j <= u <= u_j1.

    Equivalent to :func:`julia_phi` but safe for radii far below the float
    range.  The branch switch sits at u_j + (u_j1 - u_j)/(1 + p).
    """
    u = np.asarray(u, float)
    if np.any(u < u_j - 1e-12) or np.any(u > u_j1 + 1e-12):
        raise ValueError("log-radius outside the zoom window")
    u_m = u_j + (u_j1 - u_j) / (1.0 + p)
    outer = -(h - 1) * p * (u - u_j)
    inner = -(h - 1) * (u_j1 - u)
    val = np.where(u < u_m, outer, inner)
    return float(val) if val.ndim == 0 else val


def julia_phi(h, p, r, r_j, r_j1):
    """phi(xi, r) inside the window r_j1 <= r <= r_j."""
    r = np.asarray(r, float)
    if not r_j1 < r_j:
        raise ValueError("zoom radii must decrease")
    if np.any(r < r_j1) or np.any(r > r_j):
        raise ValueError("radius outside the zoom window")
    thr = julia_phi_threshold(p, r_j, r_j1)
    outer = (r / r_j) ** ((h - 1) * p)
    inner = (r_j1 / r) ** (h - 1)
    val = np.where(r > thr, outer, inner)
    return float(val) if val.ndim == 0 else val


def julia_phi_terminating(h, p, r, r_l):
    """phi(xi, r) below the last zoom radius of a pre-parabolic point."""
    r = np.asarray(r, float)
    if np.any(r > r_l):
        raise ValueError("terminating branch requires r <= r_l")
    val = (r / r_l) ** ((h - 1) * p)
    return float(val) if val.ndim == 0 else val


# --- dictionary ---------------------------------------------------------------

CONFIGURATIONS = ("L=H=A", "L=H<A", "L<H=A", "L<H<A")
ALLOWED = {
    "kleinian": {"L=H=A", "L=H<A", "L<H=A", "L<H<A"},
    "julia": {"L=H=A", "L=H<A", "L<H=A"},
}


def classify_configuration(lower, hausdorff, assouad, tol=1e-12) -> str:
    left = "=" if abs(hausdorff - lower) <= tol else "<"
    right = "=" if abs(assouad - hausdorff) <= tol else "<"
    return f"L{left}H{right}A"


@dataclass
class DictionaryReport:
    n_kleinian: int = 0
    n_julia: int = 0
    violations: list = field(default_factory=list)
    configurations: dict = field(default_factory=dict)
    kleinian_lower_below_bound: list = field(default_factory=list)
    coincidences: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def realized(self, setting, config):
        return self.configurations.get(setting, {}).get(config, 0) > 0

    def to_dict(self):
        return {
            "n_kleinian": self.n_kleinian,
            "n_julia": self.n_julia,
            "violations": self.violations,
            "configurations": self.configurations,
            "kleinian_lower_below_bound": len(self.kleinian_lower_below_bound),
            "coincidences": len(self.coincidences),
        }


def sullivan_dictionary_report(kleinian=(), julia=(), theta_grid=None) -> DictionaryReport:
    """Check the non-entries and configuration table over parameter tuples."""
    rep = DictionaryReport()
    for setting in ALLOWED:
        rep.configurations[setting] = {c: 0 for c in CONFIGURATIONS}
    for kp in kleinian:
        rep.n_kleinian += 1
        dk = kleinian_dims(kp)
        cfg = classify_configuration(dk["lower_set"], kp.delta, dk["assouad_set"])
        rep.configurations["kleinian"][cfg] += 1
        if dk["lower_set"] < kp.k_max / 2:
            rep.kleinian_lower_below_bound.append(kp)
    for jp in julia:
        rep.n_julia += 1
        dj = julia_dims(jp)
        bound = jp.p_max / (1 + jp.p_max)
        if not dj["assouad_set"] < 2:
            rep.violations.append(("assouad<2", jp))
        if not dj["lower_set"] > bound:
            rep.violations.append(("lower>p/(1+p)", jp))
        cfg = classify_configuration(dj["lower_set"], jp.h, dj["assouad_set"])
        rep.configurations["julia"][cfg] += 1
        if cfg not in ALLOWED["julia"]:
            rep.violations.append((f"configuration {cfg}", jp))
    # special case k_min = k_max = p_max = 1 with delta = h: identical formulae
    grid = np.linspace(0.01, 0.99, 99) if theta_grid is None else np.asarray(theta_grid)
    for kp in kleinian:
        if kp.k_min == kp.k_max == 1 and 0.5 < kp.delta < 2:
            jp = JuliaParams(kp.delta, 1)
            sk, sj = spectra(kp), spectra(jp)
            same = all(np.max(np.abs(sk[c](grid) - sj[c](grid))) < 1e-12 for c in sk)
            rep.coincidences.append((kp, same))
            if not same:
                rep.violations.append(("special-case coincidence", kp))
    return rep
