"""Reduced-scale invariant suites for every module, plus a mutation hook.

``run_selftest(mutate=name)`` patches one formula ingredient with a slightly
wrong version before running the suites; a healthy suite must then fail.
"""

from __future__ import annotations

import contextlib
import time
from unittest import mock

import numpy as np

from .. import formulas as F
from .. import geometry as G
from ..estimators.measures import measure_spectrum_estimate
from ..estimators.spectra import assouad_spectrum_estimate, estimation_context, lower_spectrum_estimate
from ..generators.clouds import PointCloud
from ..generators.oracles import (HoroballItinerary, depth_grid, synthetic_julia_measure,
                                  synthetic_kleinian_measure)
from ..generators.sequences import decreasing_sequence, inverted_lattice

GRID = np.round(np.arange(1, 34) * 0.03, 10)


def _perturbed_kleinian_weight(theta):
    theta = np.asarray(theta, float)
    return np.minimum(1.0, 1.05 * theta / (1.0 - theta))


def _perturbed_julia_weight(theta, p_max):
    theta = np.asarray(theta, float)
    return np.minimum(1.0, theta * (p_max + 0.1) / (1.0 - theta))


def _perturbed_measure(delta, k, T, rho):
    return -np.asarray(T, float) * delta - 1.5 * np.asarray(rho, float) * (delta - np.asarray(k, float))


MUTATIONS = {
    "kleinian_weight": ("aslab.formulas.kleinian_weight", _perturbed_kleinian_weight),
    "julia_weight": ("aslab.formulas.julia_weight", _perturbed_julia_weight),
    "global_measure": ("aslab.generators.oracles.sv_log_global_measure", _perturbed_measure),
}


def _sweep(n, seed=0):
    rng = np.random.default_rng(seed)
    kle, jul = [], []
    while len(kle) < n:
        kmin = int(rng.integers(1, 4))
        kmax = int(rng.integers(kmin, 4))
        d = float(rng.uniform(kmax / 2 + 1e-3, 3.0))
        kle.append(F.KleinianParams(d, kmin, kmax))
    while len(jul) < n:
        p = int(rng.integers(1, 6))
        h = float(rng.uniform(p / (1 + p) + 1e-3, 1.999))
        jul.append(F.JuliaParams(h, p))
    return kle, jul


# --- suites -------------------------------------------------------------------

def suite_formulas():
    out = []
    small = F.kleinian_set_spectrum(F.KleinianParams(0.6, 1, 1))
    out.append(("reference-values", np.allclose(small([0.25, 1 / 3, 0.5, 0.75]), [0.6 + 0.4 / 3, 0.8, 1.0, 1.0],
                                            atol=1e-12)))
    large = F.julia_set_spectrum(F.JuliaParams(1.4, 4), F.LOWER)
    out.append(("julia-lower-value", abs(large(0.1) - (1.4 - 0.4 * 0.4 / 0.9)) < 1e-12))
    kle, jul = _sweep(150)
    lim_ok = order_ok = pt_ok = True
    for P in kle + jul:
        sp = F.spectra(P)
        dims = F.dims(P)
        vals = {k: v(GRID) for k, v in sp.items()}
        box = dims["box_set"]
        lim_ok &= abs(sp["set_assouad"](1 - 1e-9) - dims["assouad_set"]) < 1e-6
        lim_ok &= abs(sp["set_assouad"](1e-9) - box) < 1e-6
        order_ok &= bool(np.all(vals["measure_lower"] <= vals["set_lower"] + 1e-12))
        order_ok &= bool(np.all(vals["set_lower"] <= vals["set_assouad"] + 1e-12))
        order_ok &= bool(np.all(vals["set_assouad"] <= vals["measure_assouad"] + 1e-12))
        rho = 0.5 if isinstance(P, F.KleinianParams) else 1 / (1 + P.p_max)
        form = F.phase_transition_form(box, dims["assouad_set"], rho, GRID)
        pt_ok &= float(np.max(np.abs(form - vals["set_assouad"]))) < 1e-12
    out += [("theta-limits", lim_ok), ("ordering", order_ok), ("phase-transition-form", pt_ok)]
    return out


def suite_dictionary():
    kle, jul = _sweep(200, seed=1)
    kle.append(F.KleinianParams(1.7, 1, 2))
    rep = F.sullivan_dictionary_report(kle, jul)
    return [("no-violations", rep.ok),
            ("kleinian-L<H<A", rep.realized("kleinian", "L<H<A")),
            ("julia-no-L<H<A", not rep.realized("julia", "L<H<A"))]


def suite_geometry():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(300):
        P = rng.normal(size=3)
        Q = rng.normal(size=3)
        P *= rng.uniform(0, 0.95) / np.linalg.norm(P)
        Q *= rng.uniform(0, 0.95) / np.linalg.norm(Q)
        worst = max(worst, abs(G.cross_ratio_distance(P, Q) - G.hyperbolic_distance(P, Q)))
    circle = all(G.circle_lemma_check(R).all_hold for R in (0.1, 1.0, 10.0))
    f = G.MobiusMap(1, 1, 0, 1)  # z -> z + 1 fixes infinity
    seed = G.Horoball(G.sphere_point(0.0), 0.5)
    seq = G.horoball_radius_sequence(f, seed, 1000, n_values=[10, 100, 1000])
    return [("cross-ratio", worst < 1e-6), ("circle-lemma", circle), ("horoball-radius", seq.within(50))]


def suite_generators():
    seq = decreasing_sequence(1, 5)
    lat = inverted_lattice(1, 3)
    o = synthetic_kleinian_measure(0.6, 1, 1, depths=depth_grid(50, 2000, 60))
    u = np.geomspace(1, 5000, 1000)
    mono = all(bool(np.all(np.diff(o.log_mass(t, u)) <= 1e-12)) for t in o.tags[:20])
    rng = np.random.default_rng(3)
    cont = True
    for _ in range(100):
        h, p = rng.uniform(0.6, 1.9), int(rng.integers(1, 6))
        r_j = rng.uniform(0.1, 1.0)
        r_j1 = r_j * rng.uniform(1e-4, 0.5)
        thr = F.julia_phi_threshold(p, r_j, r_j1)
        left = (thr / r_j) ** ((h - 1) * p)
        right = (r_j1 / thr) ** (h - 1)
        cont &= abs(left - right) <= 1e-9 * max(abs(left), 1e-300)
    return [
        ("sequence-values", np.allclose(np.sort(seq.points[:, 0]), [0, 0.2, 0.25, 1 / 3, 0.5, 1])),
        ("lattice-values", np.allclose(np.sort(lat.points[:, 0]), [-1, -0.5, -1 / 3, 0, 1 / 3, 0.5, 1])),
        ("oracle-monotone", mono),
        ("phi-continuity", bool(cont)),
    ]


def suite_estimators():
    seg = PointCloud(np.linspace(0, 1, 4097)[:, None], 1 / 4096, "segment")
    ctx = estimation_context(seg)
    seg_ok = all(abs(f(seg, t, context=ctx).value - 1.0) <= 0.05
                 for f in (assouad_spectrum_estimate, lower_spectrum_estimate) for t in (0.2, 0.5))
    power = synthetic_kleinian_measure(0.6, 1, 1, itineraries=[HoroballItinerary((), "none", "plain")])
    pw = measure_spectrum_estimate(power, 0.5).value
    o = synthetic_kleinian_measure(0.6, 1, 1)
    k = measure_spectrum_estimate(o, 0.25).value
    j = measure_spectrum_estimate(synthetic_julia_measure(1.4, 4), 0.1, mode=F.LOWER).value
    return [
        ("segment-spectra", seg_ok),
        ("power-law-oracle", abs(pw - 0.6) < 1e-12),
        ("kleinian-oracle", abs(k - (0.6 + 0.4 / 3)) <= 0.02),
        ("julia-oracle", abs(j - (1.4 - 0.4 * 0.4 / 0.9)) <= 0.02),
    ]


SUITES = {
    "formulas": suite_formulas,
    "dictionary": suite_dictionary,
    "geometry": suite_geometry,
    "generators": suite_generators,
    "estimators": suite_estimators,
}


def run_selftest(mutate=None) -> dict:
    """Run every suite; returns the JSON-ready summary (``ok`` plus per-suite counts)."""
    if mutate is not None and mutate not in MUTATIONS:
        raise KeyError(f"unknown mutation {mutate!r}; choose from {', '.join(sorted(MUTATIONS))}")
    patch = mock.patch(*MUTATIONS[mutate]) if mutate else contextlib.nullcontext()
    summary = {"schema": 1, "mutation": mutate, "suites": {}}
    with patch:
        for name, fn in SUITES.items():
            t0 = time.perf_counter()
            try:
                checks = fn()
                error = None
            except Exception as exc:  # a crashing suite counts as a failure
                checks, error = [], f"{type(exc).__name__}: {exc}"
            failed = [c for c, ok in checks if not ok]
            summary["suites"][name] = {
                "passed": len(checks) - len(failed), "failed": len(failed) + (error is not None),
                "failures": failed + ([error] if error else []),
                "seconds": round(time.perf_counter() - t0, 3),
            }
    summary["ok"] = all(s["failed"] == 0 for s in summary["suites"].values())
    return summary
