"""The generate / estimate / predict / compare pipeline behind the CLI.

Artifacts are deterministic functions of the run config: no timestamps or
runtimes are written into them, JSON keys are sorted and floats are written
with ``repr`` precision.  Every file is written atomically.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import formulas
from ..estimators.grid import ScaleWindow, WindowError
from ..estimators.measures import measure_spectrum_estimate
from ..estimators.spectra import (assouad_dimension_estimate, assouad_spectrum_estimate,
                                  box_dimension_estimate, estimation_context, lower_dimension_estimate,
                                  lower_spectrum_estimate)
from ..generators.clouds import PointCloud, _atomic_write, read_cloud, write_binary, write_csv
from ..generators.julia import julia_inverse_iteration
from ..generators.kleinian import OrbitExplosion, apollonian
from ..generators.oracles import depth_grid, synthetic_julia_measure, synthetic_kleinian_measure
from ..generators.sequences import decreasing_sequence, inverted_lattice
from .config import SCHEMA, ConfigError, RunConfig

CLOUD_CSV = "cloud.csv"
CLOUD_BIN = "cloud.aslb"
ORACLE_JSON = "oracle.json"
ESTIMATE_CSV = "estimate.csv"
ESTIMATE_JSON = "estimate.json"
PREDICTION_CSV = "prediction.csv"
PREDICTION_JSON = "prediction.json"
COMPARISON_CSV = "comparison.csv"
COMPARISON_JSON = "comparison.json"
PLOT_SVG = "spectra.svg"


class ThetaGridMismatch(ValueError):
    """Estimate and prediction files were evaluated on different theta grids."""


class PlotInputError(ValueError):
    """Nothing to plot."""


def _num(v):
    """Deterministic text form of a number (empty for missing values)."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return repr(float(v))


def _write_json(path, obj):
    _atomic_write(path, (json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n").encode())


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, Path):
        return str(v)
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    _atomic_write(path, buf.getvalue().encode())


def _read_csv(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path} not found")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return [], []
    return rows[0], rows[1:]


# --- generation ---------------------------------------------------------------

_GENERATOR_KEYS = {
    "apollonian": {"eps_proj", "depth", "cap", "chart"},
    "cauliflower": {"iters", "cell", "seeds", "method", "cusp_steps", "burn_in"},
    "petal2": {"iters", "cell", "seeds", "method", "cusp_steps", "burn_in"},
    "petal4": {"iters", "cell", "seeds", "method", "cusp_steps", "burn_in"},
    "zlattice1": {"n"},
    "zlattice2": {"n"},
    "sequence": {"p", "n"},
    "synthetic": {"depth_min", "depth_max", "depth_points"},
}


def _check_params(cfg: RunConfig):
    extra = set(cfg.params) - _GENERATOR_KEYS[cfg.preset]
    if extra:
        raise ConfigError(f"preset {cfg.preset} does not take parameters {sorted(extra)}")


def build_cloud(cfg: RunConfig) -> PointCloud:
    """Generate the preset's point cloud (raises OrbitExplosion with a partial cloud)."""
    _check_params(cfg)
    p = cfg.params
    try:
        if cfg.preset == "apollonian":
            kw = {k: p[k] for k in ("eps_proj", "depth", "cap", "chart") if k in p}
            return apollonian(**kw)
        if cfg.preset in ("cauliflower", "petal2", "petal4"):
            return julia_inverse_iteration(
                cfg.preset, int(p["iters"]), seeds=int(p.get("seeds", 64)), method=p.get("method", "pruned"),
                cell=float(p.get("cell", 2e-5)), cusp_steps=int(p.get("cusp_steps", 20000)),
                burn_in=int(p.get("burn_in", 12)), seed=cfg.seed)
        if cfg.preset == "zlattice1":
            return inverted_lattice(1, int(p["n"]))
        if cfg.preset == "zlattice2":
            return inverted_lattice(2, int(p["n"]))
        if cfg.preset == "sequence":
            return decreasing_sequence(float(p["p"]), int(p["n"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad generator parameters for {cfg.preset}: {exc}") from None
    raise ConfigError(f"preset {cfg.preset} does not produce a point cloud")


def build_oracle(cfg: RunConfig):
    _check_params(cfg)
    P = cfg.prediction
    p = cfg.params
    depths = depth_grid(float(p.get("depth_min", 50.0)), float(p.get("depth_max", 20_000.0)),
                        int(p.get("depth_points", 400)))
    if isinstance(P, formulas.KleinianParams):
        return synthetic_kleinian_measure(P.delta, P.k_min, P.k_max, depths=depths), depths
    if isinstance(P, formulas.JuliaParams):
        return synthetic_julia_measure(P.h, P.p_max, depths=depths, p_min=P.p_min), depths
    raise ConfigError("the synthetic preset needs a kleinian or julia prediction block")


def cmd_generate(cfg: RunConfig) -> dict:
    if cfg.source == "oracle":
        oracle, depths = build_oracle(cfg)
        info = {"schema": SCHEMA, "kind": oracle.kind, "params": formulas.params_to_dict(oracle.params),
                "n_tags": len(oracle.tags), "tags": list(oracle.tags),
                "depths": [float(depths[0]), float(depths[-1]), int(len(depths))]}
        path = cfg.path(ORACLE_JSON)
        _write_json(path, info)
        return {"oracle": str(path), "n_tags": len(oracle.tags)}
    try:
        cloud = build_cloud(cfg)
    except OrbitExplosion as exc:
        if exc.partial is not None:
            write_csv(exc.partial, cfg.path(CLOUD_CSV))
            write_binary(exc.partial, cfg.path(CLOUD_BIN))
        raise
    write_csv(cloud, cfg.path(CLOUD_CSV))
    write_binary(cloud, cfg.path(CLOUD_BIN))
    return {"cloud": str(cfg.path(CLOUD_CSV)), "binary": str(cfg.path(CLOUD_BIN)),
            "n_points": len(cloud), "eps_min": cloud.eps_min}


def load_cloud(cfg: RunConfig) -> PointCloud:
    """The cloud named in the config, else the generated files, else a fresh build."""
    if "cloud" in cfg.inputs:
        return read_cloud(cfg.inputs["cloud"])
    for name in (CLOUD_BIN, CLOUD_CSV):
        if cfg.path(name).exists():
            return read_cloud(cfg.path(name))
    return build_cloud(cfg)


def resolve_window(cfg: RunConfig, cloud: PointCloud):
    w = cfg.window
    if w is None:
        return None
    try:
        safety = float(w.get("safety", 8.0))
        if "r_min" in w or "r_max" in w:
            r_min = float(w.get("r_min", safety * cloud.eps_min))
            r_max = float(w.get("r_max", cloud.diameter))
        else:
            r_min = safety * cloud.eps_min
            r_max = float(w.get("r_max_fraction", 1.0)) * cloud.diameter
    except (TypeError, ValueError):
        raise ConfigError("window entries must be numbers") from None
    window = ScaleWindow(r_min, r_max, safety)
    window.validate(cloud)
    return window


# --- estimation ---------------------------------------------------------------

def _witness_text(rep):
    w = rep.witness
    if "tag" in w:
        return f"tag={w['tag']} log_r={w['log_r']!r} log_R={w['log_R']!r}"
    center = ";".join(repr(float(c)) for c in w.get("center", []))
    return f"center={center} R={w.get('R')!r} r={w.get('r')!r}"


def cmd_estimate(cfg: RunConfig) -> dict:
    grid = cfg.theta_grid
    reports = {q: [] for q in cfg.quantities}
    endpoints = {}
    meta = {"preset": cfg.preset, "source": cfg.source, "seed": cfg.seed}
    if cfg.source == "oracle":
        oracle, depths = build_oracle(cfg)
        for q in cfg.quantities:
            mode = q.split("_", 1)[1]
            for t in grid:
                reports[q].append(measure_spectrum_estimate(oracle, t, mode=mode, depths=depths))
        meta.update({"n_tags": len(oracle.tags), "oracle": oracle.kind})
    else:
        cloud = load_cloud(cfg)
        window = resolve_window(cfg, cloud)
        ctx = estimation_context(cloud, window, cfg.centers, cfg.seed)
        fns = {"set_assouad": assouad_spectrum_estimate, "set_lower": lower_spectrum_estimate}
        for q in cfg.quantities:
            for t in grid:
                try:
                    reports[q].append(fns[q](cloud, t, raw=cfg.raw, context=ctx))
                except WindowError as exc:
                    reports[q].append(str(exc))
        for name, fn in (("box", box_dimension_estimate), ("assouad_dimension", assouad_dimension_estimate),
                         ("lower_dimension", lower_dimension_estimate)):
            try:
                if name == "box":
                    rep = fn(cloud, ctx.window, grid=ctx.grid)
                else:
                    rep = fn(cloud, raw=cfg.raw, context=ctx)
                endpoints[name] = {"value": rep.value, "half_width": rep.half_width}
            except WindowError as exc:
                endpoints[name] = {"value": None, "note": str(exc)}
        meta.update({"n_points": len(cloud), "eps_min": cloud.eps_min, "window": ctx.window_dict(),
                     "provenance": cloud.provenance})

    header = ["theta"]
    for q in cfg.quantities:
        header += [q, f"{q}_half_width", f"{q}_witness"]
    rows = []
    for i, t in enumerate(grid):
        row = [_num(t)]
        for q in cfg.quantities:
            rep = reports[q][i]
            if isinstance(rep, str):
                row += ["nan", "nan", f"skipped: {rep}"]
            else:
                row += [_num(rep.value), _num(rep.half_width), _witness_text(rep)]
        rows.append(row)
    _write_csv(cfg.path(ESTIMATE_CSV), header, rows)
    body = {
        "schema": SCHEMA, "config": cfg.to_dict(), "meta": meta, "endpoints": endpoints,
        "theta_grid": list(grid),
        "reports": {q: [r if isinstance(r, str) else r.to_dict() for r in reports[q]] for q in cfg.quantities},
    }
    _write_json(cfg.path(ESTIMATE_JSON), body)
    skipped = sum(isinstance(r, str) for q in cfg.quantities for r in reports[q])
    return {"estimate": str(cfg.path(ESTIMATE_CSV)), "rows": len(rows), "skipped": skipped,
            "endpoints": endpoints}


# --- prediction ---------------------------------------------------------------

def prediction_profiles(prediction) -> dict:
    """Column name -> SpectrumProfile for a parameter block."""
    if isinstance(prediction, (formulas.KleinianParams, formulas.JuliaParams)):
        return formulas.spectra(prediction)
    kind, value = prediction
    if kind == "lattice":
        return {"set_assouad": formulas.lattice_set_spectrum(value)}
    if kind == "sequence":
        return {"set_assouad": formulas.sequence_set_spectrum(value)}
    raise ConfigError(f"unknown prediction kind {kind!r}")


def prediction_dims(prediction) -> dict:
    if isinstance(prediction, (formulas.KleinianParams, formulas.JuliaParams)):
        return formulas.dims(prediction)
    prof = prediction_profiles(prediction)["set_assouad"]
    return {"box_set": prof.box, "assouad_set": prof.assouad, "lower_set": prof.lower}


def prediction_table(prediction, grid):
    profiles = prediction_profiles(prediction)
    cols = [c for c in ("set_assouad", "set_lower", "measure_assouad", "measure_lower") if c in profiles]
    values = {c: np.asarray(profiles[c](np.asarray(grid, float)), float) for c in cols}
    return cols, values


def cmd_predict(cfg: RunConfig) -> dict:
    if cfg.prediction is None:
        raise ConfigError(f"preset {cfg.preset} has no prediction; add a prediction block")
    cols, values = prediction_table(cfg.prediction, cfg.theta_grid)
    rows = [[_num(t)] + [_num(values[c][i]) for c in cols] for i, t in enumerate(cfg.theta_grid)]
    _write_csv(cfg.path(PREDICTION_CSV), ["theta"] + cols, rows)
    profiles = prediction_profiles(cfg.prediction)
    body = {
        "schema": SCHEMA, "prediction": cfg.prediction_spec, "dims": prediction_dims(cfg.prediction),
        "phase_transition": {c: profiles[c].phase_transition for c in cols},
        "theta_grid": list(cfg.theta_grid),
    }
    _write_json(cfg.path(PREDICTION_JSON), body)
    return {"prediction": str(cfg.path(PREDICTION_CSV)), "rows": len(rows), "columns": cols}


# --- comparison ---------------------------------------------------------------

@dataclass
class ComparisonReport:
    """Per-theta predicted vs estimated values with pass/fail against ``tolerance``."""

    tolerance: float
    rows: list = field(default_factory=list)
    endpoints: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def failures(self):
        return [r for r in self.rows if r["status"] == "fail"]

    @property
    def ok(self):
        return not self.failures and any(r["status"] == "pass" for r in self.rows)

    def to_dict(self):
        return {"schema": SCHEMA, "tolerance": self.tolerance, "ok": self.ok, "rows": self.rows,
                "endpoints": self.endpoints, "metadata": self.metadata,
                "counts": {s: sum(r["status"] == s for r in self.rows) for s in ("pass", "fail", "skipped")}}


def _float(text):
    try:
        return float(text)
    except ValueError:
        return float("nan")


def compare_files(estimate_path, prediction_path, tolerance) -> ComparisonReport:
    eh, erows = _read_csv(estimate_path)
    ph, prows = _read_csv(prediction_path)
    if not erows or not prows or eh[0] != "theta" or ph[0] != "theta":
        raise ConfigError("estimate and prediction files need a theta column and at least one row")
    et = [_float(r[0]) for r in erows]
    pt = [_float(r[0]) for r in prows]
    if len(et) != len(pt) or any(abs(a - b) > 1e-12 for a, b in zip(et, pt)):
        raise ThetaGridMismatch(f"theta grids differ ({len(et)} estimate rows, {len(pt)} prediction rows)")
    shared = [c for c in ph[1:] if c in eh]
    if not shared:
        raise ConfigError("estimate and prediction files share no quantity column")
    rep = ComparisonReport(float(tolerance))
    for i, t in enumerate(et):
        for c in shared:
            est = _float(erows[i][eh.index(c)])
            pred = _float(prows[i][ph.index(c)])
            if math.isnan(est):
                status, err = "skipped", None
            else:
                err = abs(est - pred)
                status = "pass" if err <= tolerance + 1e-12 else "fail"
            rep.rows.append({"theta": t, "quantity": c, "predicted": pred,
                             "estimated": None if math.isnan(est) else est,
                             "abs_error": err, "status": status})
    _endpoints(rep, Path(estimate_path).with_suffix(".json"), Path(prediction_path).with_suffix(".json"))
    return rep


def _endpoints(rep, est_json, pred_json):
    """Box and Assouad/lower dimension comparisons, when both JSON siblings exist."""
    if not (est_json.exists() and pred_json.exists()):
        return
    est = json.loads(est_json.read_text())
    pred = json.loads(pred_json.read_text())
    rep.metadata = {k: v for k, v in est.get("meta", {}).items() if k != "provenance"}
    dims = pred.get("dims", {})
    for name, key in (("box", "box_set"), ("assouad_dimension", "assouad_set"),
                      ("lower_dimension", "lower_set")):
        e = est.get("endpoints", {}).get(name, {}).get("value")
        p = dims.get(key)
        if e is None or p is None:
            continue
        err = abs(e - p)
        rep.endpoints.append({"quantity": name, "predicted": p, "estimated": e, "abs_error": err,
                              "within_tolerance": err <= rep.tolerance + 1e-12})


def cmd_compare(cfg: RunConfig, estimate=None, prediction=None, tolerance=None) -> ComparisonReport:
    est = Path(estimate or cfg.inputs.get("estimate") or cfg.path(ESTIMATE_CSV))
    pred = Path(prediction or cfg.inputs.get("prediction") or cfg.path(PREDICTION_CSV))
    tol = cfg.default_tolerance if tolerance is None else float(tolerance)
    rep = compare_files(est, pred, tol)
    _write_json(cfg.path(COMPARISON_JSON), rep.to_dict())
    _write_csv(cfg.path(COMPARISON_CSV), ["theta", "quantity", "predicted", "estimated", "abs_error", "status"],
               [[_num(r["theta"]), r["quantity"], _num(r["predicted"]), _num(r["estimated"]),
                 _num(r["abs_error"]), r["status"]] for r in rep.rows])
    return rep
