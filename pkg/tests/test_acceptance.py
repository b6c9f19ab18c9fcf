"""Acceptance criteria 1-7.  Each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
happen; they are repeated in the terminal summary either way.
"""

import csv
import json
import time

import numpy as np
import pytest

from aslab import formulas as F
from aslab import geometry as G
from aslab.estimators.grid import ScaleWindow, WindowError
from aslab.estimators.measures import measure_spectrum_estimate
from aslab.estimators.spectra import assouad_spectrum_estimate, estimation_context
from aslab.generators.oracles import synthetic_julia_measure, synthetic_kleinian_measure
from aslab.generators.sequences import decreasing_sequence
from aslab.harness.cli import main
from aslab.harness.config import DEFAULT_THETA_GRID

from conftest import record

GRID = np.array(DEFAULT_THETA_GRID)
SWEEP_SIZE = 10_000


def sweep(n=SWEEP_SIZE, seed=2024):
    """n valid Kleinian and n valid Julia tuples, including the boundary cases."""
    rng = np.random.default_rng(seed)
    kmin = rng.integers(1, 4, n)
    kmax = kmin + rng.integers(0, 3, n)
    lo = kmax / 2
    delta = lo + (4.0 - lo) * rng.uniform(1e-6, 1.0, n)
    # pin some tuples onto the branch boundaries delta = k_min and delta = k_max
    delta[::7] = np.maximum(kmin[::7], lo[::7] + 1e-6)
    delta[3::7] = kmax[3::7]
    kle = [F.KleinianParams(float(d), int(a), int(b)) for d, a, b in zip(delta, kmin, kmax)]
    p = rng.integers(1, 7, n)
    hlo = p / (1 + p)
    h = hlo + (2 - hlo) * rng.uniform(1e-6, 1 - 1e-6, n)
    h[::5] = 1.0
    jul = [F.JuliaParams(float(a), int(b)) for a, b in zip(h, p)]
    return kle, jul


def test_1_formula_identities():
    t0 = time.perf_counter()
    kle, jul = sweep()
    bad = {"theta->1": 0, "theta->0": 0, "phase-transition form": 0, "ordering": 0, "bound": 0}
    near0, near1 = 1e-10, 1 - 1e-10
    for P in kle + jul:
        sp, dm = F.spectra(P), F.dims(P)
        rho = 0.5 if isinstance(P, F.KleinianParams) else 1 / (1 + P.p_max)
        v = {k: f(GRID) for k, f in sp.items()}
        # (a) theta -> 1 limits are the Assouad and lower dimensions
        lim1 = (sp["set_assouad"](near1) - dm["assouad_set"], sp["set_lower"](near1) - dm["lower_set"],
                sp["measure_assouad"](near1) - dm["assouad_measure"],
                sp["measure_lower"](near1) - dm["lower_measure"])
        bad["theta->1"] += max(map(abs, lim1)) > 1e-6
        # (b) theta -> 0 Assouad-spectrum limits are the box dimensions
        lim0 = (sp["set_assouad"](near0) - dm["box_set"], sp["measure_assouad"](near0) - dm["box_measure"])
        bad["theta->0"] += max(map(abs, lim0)) > 1e-6
        # (c) the phase-transition closed form
        form = F.phase_transition_form(dm["box_set"], dm["assouad_set"], rho, GRID)
        bad["phase-transition form"] += float(np.max(np.abs(form - v["set_assouad"]))) >= 1e-12
        # (d) ordering of the four spectra
        bad["ordering"] += not (np.all(v["measure_lower"] <= v["set_lower"] + 1e-12)
                                and np.all(v["set_lower"] <= v["set_assouad"] + 1e-12)
                                and np.all(v["set_assouad"] <= v["measure_assouad"] + 1e-12))
        # (e) general bounds, with a strict phase transition whenever non-constant
        lo, hi = F.general_spectrum_bounds(dm["box_set"], dm["assouad_set"], GRID)
        ok = np.all(v["set_assouad"] >= lo - 1e-12) and np.all(v["set_assouad"] <= hi + 1e-12)
        if not sp["set_assouad"].is_constant:
            ok = ok and sp["set_assouad"].phase_transition == rho
            ok = ok and rho > F.phase_transition_lower_bound(dm["box_set"], dm["assouad_set"])
        bad["bound"] += not ok
    seconds = time.perf_counter() - t0
    failing = {k: v for k, v in bad.items() if v}
    detail = f"{len(kle)} Kleinian + {len(jul)} Julia tuples" + (f", failures {failing}" if failing else "")
    assert record(1, "formula identity suite", not failing, seconds, 5, detail)


# closed-form values substituted by hand at theta = 0.25, 1/3, 0.5, 0.75
REFERENCE_VALUES = {
    "kleinian_small_delta": ({"kind": "kleinian", "delta": 0.6, "k_min": 1, "k_max": 1}, {
        "set_assouad": [0.6 + 0.4 / 3, 0.8, 1.0, 1.0],
        "set_lower": [0.6, 0.6, 0.6, 0.6],
        "measure_assouad": [0.6 + 0.4 / 3, 0.8, 1.0, 1.0],
        "measure_lower": [0.2, 0.2, 0.2, 0.2],  # delta <= (k_min + k_max)/2: constant 2 delta - k_max
    }),
    "julia_small_h": ({"kind": "julia", "h": 0.7, "p_max": 2}, {
        "set_assouad": [0.9, 1.0, 1.0, 1.0],
        "set_lower": [0.7, 0.7, 0.7, 0.7],
    }),
    "kleinian_large_delta": ({"kind": "kleinian", "delta": 1.9, "k_min": 1, "k_max": 1}, {
        "set_assouad": [1.9, 1.9, 1.9, 1.9],
        "set_lower": [1.6, 1.45, 1.0, 1.0],
        "measure_assouad": [2.8, 2.8, 2.8, 2.8],
    }),
    "julia_large_h": ({"kind": "julia", "h": 1.4, "p_max": 4}, {
        "set_assouad": [1.4, 1.4, 1.4, 1.4],
        "set_lower": [1.0, 1.0, 1.0, 1.0],
    }),
    "kleinian_mixed_ranks": ({"kind": "kleinian", "delta": 1.7, "k_min": 1, "k_max": 2}, {
        "set_assouad": [1.8, 1.85, 2.0, 2.0],
        "set_lower": [1.7 - 0.7 / 3, 1.35, 1.0, 1.0],
        "measure_assouad": [2.4, 2.4, 2.4, 2.4],
    }),
}


def test_2_reference_curves(tmp_path):
    t0 = time.perf_counter()
    worst = 0.0
    for name, (pred, expected) in REFERENCE_VALUES.items():
        cfg = tmp_path / f"{name}.json"
        cfg.write_text(json.dumps({
            "schema": 1, "generator": {"preset": "synthetic"}, "prediction": pred,
            "estimator": {"theta_grid": [0.1, 0.2, 0.25, 1 / 3, 0.5, 0.75]},
            "outputs": {"dir": str(tmp_path / name)}}))
        assert main(["predict", "--config", str(cfg)]) == 0
        with open(tmp_path / name / "prediction.csv") as fh:
            rows = list(csv.DictReader(fh))
        sampled = rows[2:]
        for col, vals in expected.items():
            got = [float(r[col]) for r in sampled]
            worst = max(worst, max(abs(a - b) for a, b in zip(got, vals)))
        if name == "julia_large_h":
            worst = max(worst, abs(float(rows[0]["set_lower"]) - (1.4 - 0.4 * 0.4 / 0.9)),
                        abs(float(rows[1]["set_lower"]) - 1.0))
    seconds = time.perf_counter() - t0
    assert record(2, "reference curves", worst < 1e-12, seconds, 5, f"max deviation {worst:.1e}")


def test_3_sequence_sets():
    t0 = time.perf_counter()
    found = []
    for p, thetas in ((1.0, (0.3, 0.5, 0.7)), (2.0, (0.25,))):
        cloud = decreasing_sequence(p, 100_000)
        ctx = estimation_context(cloud, ScaleWindow.default(cloud))
        theory = F.sequence_set_spectrum(p)
        for t in thetas:
            est = assouad_spectrum_estimate(cloud, t, context=ctx).value
            found.append((p, t, est, theory(t)))
    seconds = time.perf_counter() - t0
    ok = all(abs(e - th) <= 0.1 for _, _, e, th in found)
    detail = ", ".join(f"p={p:g} theta={t:g}: {e:.3f} vs {th:.3f}" for p, t, e, th in found)
    assert record(3, "sequence-set estimation", ok, seconds, 60, detail)


KLEINIAN_ORACLES = [(0.6, 1, 1), (1.7, 1, 2), (2.2, 2, 3), (1.9, 1, 1)]
JULIA_ORACLES = [(0.7, 2), (1.4, 4)]


def test_4_oracle_round_trip():
    t0 = time.perf_counter()
    worst, where = 0.0, None
    for args in KLEINIAN_ORACLES:
        o, P = synthetic_kleinian_measure(*args), F.KleinianParams(*args)
        for mode in F.MODES:
            prof = F.kleinian_measure_spectrum(P, mode)
            for t in GRID:
                err = abs(measure_spectrum_estimate(o, t, mode=mode).value - prof(t))
                if err > worst:
                    worst, where = err, (args, mode, float(t))
    for args in JULIA_ORACLES:
        o, P = synthetic_julia_measure(*args), F.JuliaParams(*args)
        for mode in F.MODES:
            prof = F.julia_measure_spectrum(P, mode)
            for t in GRID:
                err = abs(measure_spectrum_estimate(o, t, mode=mode).value - prof(t))
                if err > worst:
                    worst, where = err, (args, mode, float(t))
    rng = np.random.default_rng(4)
    phi_worst = 0.0
    for _ in range(100):
        h, p = rng.uniform(0.55, 1.95), int(rng.integers(1, 6))
        r_j = rng.uniform(0.05, 1.0)
        r_j1 = r_j * rng.uniform(1e-6, 0.5)
        thr = F.julia_phi_threshold(p, r_j, r_j1)
        left, right = (thr / r_j) ** ((h - 1) * p), (r_j1 / thr) ** (h - 1)
        phi_worst = max(phi_worst, abs(left - right) / left)
    seconds = time.perf_counter() - t0
    ok = worst <= 0.05 and phi_worst <= 1e-9
    detail = f"max error {worst:.4f} at {where}; phi continuity {phi_worst:.1e}"
    assert record(4, "oracle round-trip", ok, seconds, 30, detail)


def test_5_geometry():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    v = rng.normal(size=(2, 10_000, 3))
    v /= np.linalg.norm(v, axis=2)[..., None]
    v *= rng.uniform(0, 0.99, size=(2, 10_000, 1))
    cross = max(abs(G.cross_ratio_distance(p, q) - G.hyperbolic_distance(p, q)) for p, q in zip(v[0], v[1]))
    circle = all(G.circle_lemma_check(R).all_hold for R in (0.1, 1.0, 10.0))
    seq = G.horoball_radius_sequence(G.MobiusMap(1, 1, 0, 1), G.Horoball(G.sphere_point(0.0), 0.5), 10_000,
                                     n_values=np.unique(np.geomspace(10, 10_000, 60).astype(int)))
    lo, hi = seq.bracket(10)
    p = G.sphere_point(0.0)
    ratios = [G.escape_function(p, T, [G.Horoball(p, 0.5)])[0] / T for T in np.geomspace(20, 2000, 40)]
    seconds = time.perf_counter() - t0
    ok = cross < 1e-6 and circle and 1 / 50 <= lo and hi <= 50 and min(ratios) >= 0.9
    detail = (f"cross-ratio {cross:.1e}, circle lemma {circle}, horoball bracket [{lo:.3f}, {hi:.3f}], "
              f"min escape ratio {min(ratios):.3f}")
    assert record(5, "geometry suite", ok, seconds, 30, detail)


@pytest.mark.slow
def test_6_generated_fractals(tmp_path):
    t0 = time.perf_counter()
    results = {}
    for preset in ("apollonian", "cauliflower"):
        out = tmp_path / preset
        assert main(["generate", "--preset", preset, "--out", str(out)]) == 0
        assert main(["estimate", "--preset", preset, "--out", str(out)]) == 0
        est = json.loads((out / "estimate.json").read_text())
        with open(out / "estimate.csv") as fh:
            vals = [float(r["set_assouad"]) for r in csv.DictReader(fh) if r["set_assouad"] != "nan"]
        results[preset] = (est["endpoints"]["box"]["value"], np.array(vals))
    box_a, spec_a = results["apollonian"]
    box_c, spec_c = results["cauliflower"]
    apo_ok = 1.25 <= box_a <= 1.36 and len(spec_a) >= 5 and np.ptp(spec_a) <= 0.1
    cau_ok = box_c > 1 and len(spec_c) >= 5 and np.max(np.abs(spec_c - box_c)) <= 0.1
    seconds = time.perf_counter() - t0
    detail = (f"apollonian box {box_a:.3f}, spectrum spread {np.ptp(spec_a):.3f} over {len(spec_a)} theta; "
              f"cauliflower h_est {box_c:.3f}, max deviation {np.max(np.abs(spec_c - box_c)):.3f} "
              f"over {len(spec_c)} theta")
    assert record(6, "generated-fractal sanity", apo_ok and cau_ok, seconds, 300, detail)


def test_7_dictionary_non_entries():
    t0 = time.perf_counter()
    kle, jul = sweep()
    kle.append(F.KleinianParams(1.7, 1, 2))
    rep = F.sullivan_dictionary_report(kle, jul)
    ok = rep.ok and not rep.realized("julia", "L<H<A") and rep.realized("kleinian", "L<H<A")
    witness = F.classify_configuration(1.0, 1.7, 2.0) == "L<H<A"
    seconds = time.perf_counter() - t0
    detail = f"{len(rep.violations)} violations, Julia configurations {rep.configurations['julia']}"
    assert record(7, "dictionary non-entries", ok and witness, seconds, 5, detail)
