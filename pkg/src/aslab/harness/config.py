"""Run configuration: presets, defaults and validation.

A run config is a JSON object with ``"schema": 1`` and four optional blocks::

    {
      "schema": 1,
      "seed": 0,
      "generator":  {"preset": "zlattice1", "params": {"n": 100000}},
      "estimator":  {"theta_grid": {"start": 0.1, "stop": 0.9, "step": 0.1},
                     "window": {"safety": 8, "r_max_fraction": 1.0},
                     "centers": "auto", "raw": false,
                     "quantities": ["set_assouad", "set_lower"]},
      "prediction": {"kind": "kleinian", "delta": 0.6, "k_min": 1, "k_max": 1},
      "outputs":    {"dir": "out"},
      "tolerance":  null
    }

Every block falls back to the preset's defaults, so ``{"schema": 1}`` plus a
``--preset`` flag is a complete config.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..formulas import ParameterError, params_from_dict

SCHEMA = 1
DEFAULT_THETA_GRID = tuple(round(0.03 * i, 10) for i in range(1, 34))
CLOUD_TOLERANCE = 0.1
ORACLE_TOLERANCE = 0.05
SET_QUANTITIES = ("set_assouad", "set_lower")
MEASURE_QUANTITIES = ("measure_assouad", "measure_lower")
QUANTITIES = SET_QUANTITIES + MEASURE_QUANTITIES


class ConfigError(ValueError):
    """Malformed run config, unknown preset or invalid parameter block."""


# Preset defaults.  Windows are given relative to the cloud: r_min is
# safety * eps_min and r_max is r_max_fraction * diameter.
PRESETS = {
    "apollonian": {
        "source": "cloud",
        "params": {"eps_proj": 3e-5, "depth": 400},
        "window": {"safety": 64.0, "r_max_fraction": 0.125},
        # rank-one cusps and the gasket's Poincare exponent (a literature value)
        "prediction": {"kind": "kleinian", "delta": 1.3057, "k_min": 1, "k_max": 1},
    },
    "cauliflower": {
        "source": "cloud",
        "params": {"iters": 3000, "cell": 2e-5, "seeds": 64, "method": "pruned"},
        "window": {"safety": 8.0, "r_max_fraction": 0.125},
        # Hausdorff dimension of the cauliflower Julia set (a literature value)
        "prediction": {"kind": "julia", "h": 1.0812, "p_max": 1},
    },
    "petal2": {
        "source": "cloud",
        "params": {"iters": 3000, "cell": 3e-4, "seeds": 64, "method": "pruned"},
        "window": {"safety": 8.0, "r_max_fraction": 0.125},
        "prediction": None,
    },
    "petal4": {
        "source": "cloud",
        "params": {"iters": 3000, "cell": 3e-4, "seeds": 64, "method": "pruned"},
        "window": {"safety": 8.0, "r_max_fraction": 0.125},
        "prediction": None,
    },
    "zlattice1": {
        "source": "cloud",
        "params": {"n": 100_000},
        "window": {"safety": 8.0, "r_max_fraction": 1.0},
        "prediction": {"kind": "lattice", "k": 1},
    },
    "zlattice2": {
        "source": "cloud",
        "params": {"n": 300},
        "window": {"safety": 8.0, "r_max_fraction": 1.0},
        "prediction": {"kind": "lattice", "k": 2},
    },
    "sequence": {
        "source": "cloud",
        "params": {"p": 1.0, "n": 100_000},
        "window": {"safety": 8.0, "r_max_fraction": 1.0},
        "prediction": {"kind": "sequence", "p": 1.0},
    },
    "synthetic": {
        "source": "oracle",
        "params": {"depth_min": 50.0, "depth_max": 20_000.0, "depth_points": 400},
        "window": None,
        "prediction": {"kind": "kleinian", "delta": 0.6, "k_min": 1, "k_max": 1},
    },
}


def theta_grid_from(spec):
    """Parse a theta grid: None (default), a list, or {"start", "stop", "step"}."""
    if spec is None:
        grid = np.array(DEFAULT_THETA_GRID)
    elif isinstance(spec, dict):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("theta_grid needs numeric start, stop and step") from None
        if not step > 0:
            raise ConfigError("theta_grid step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        grid = np.round(start + step * np.arange(n), 10)
    else:
        try:
            grid = np.array([float(t) for t in spec])
        except (TypeError, ValueError):
            raise ConfigError("theta_grid must be a list of numbers") from None
    if len(grid) == 0:
        raise ConfigError("theta grid is empty")
    if np.any(grid <= 0) or np.any(grid >= 1):
        raise ConfigError("theta grid must lie strictly inside (0, 1)")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError("theta grid must be strictly increasing")
    return tuple(float(t) for t in grid)


def prediction_from(spec):
    """KleinianParams, JuliaParams, or a ("lattice"|"sequence", value) pair."""
    if spec is None:
        return None
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("prediction needs a 'kind'")
    body = {k: v for k, v in spec.items() if k != "kind"}
    kind = spec["kind"]
    try:
        if kind in ("kleinian", "julia"):
            return params_from_dict(spec)
        if kind == "lattice":
            return ("lattice", int(body["k"]))
        if kind == "sequence":
            return ("sequence", float(body["p"]))
        raise ConfigError(f"unknown prediction kind {kind!r}")
    except ParameterError:
        raise
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"invalid prediction block: {exc}") from None


@dataclass
class RunConfig:
    preset: str
    params: dict
    seed: int = 0
    theta_grid: tuple = DEFAULT_THETA_GRID
    window: dict = None
    centers: str = "auto"
    raw: bool = False
    quantities: tuple = SET_QUANTITIES
    prediction: object = None
    prediction_spec: dict = None
    out_dir: Path = Path("out")
    tolerance: float = None
    source: str = "cloud"
    inputs: dict = field(default_factory=dict)

    @property
    def default_tolerance(self):
        if self.tolerance is not None:
            return self.tolerance
        return ORACLE_TOLERANCE if self.source == "oracle" else CLOUD_TOLERANCE

    def path(self, name):
        return Path(self.out_dir) / name

    def to_dict(self):
        return {
            "schema": SCHEMA, "seed": self.seed,
            "generator": {"preset": self.preset, "params": self.params},
            "estimator": {"theta_grid": list(self.theta_grid), "window": self.window,
                          "centers": self.centers, "raw": self.raw, "quantities": list(self.quantities)},
            "prediction": self.prediction_spec,
            "outputs": {"dir": str(self.out_dir)},
            "tolerance": self.tolerance,
        }


def load_config(path=None, preset=None, out=None, seed=None, tolerance=None) -> RunConfig:
    """Read a run config (if any) and apply command-line overrides."""
    raw = {"schema": SCHEMA}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("schema") != SCHEMA:
        raise ConfigError(f"unsupported config schema {raw.get('schema')!r}, expected {SCHEMA}")
    gen = dict(raw.get("generator") or {})
    est = dict(raw.get("estimator") or {})
    outs = dict(raw.get("outputs") or {})

    name = preset or gen.get("preset")
    if name is None:
        raise ConfigError("no generator preset given (use --preset or generator.preset)")
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    base = copy.deepcopy(PRESETS[name])
    params = dict(base["params"])
    if gen.get("preset") in (None, name):  # params written for another preset do not carry over
        params.update(gen.get("params") or {})

    window = base["window"]
    if "window" in est:
        window = est["window"]
    if window is not None and not isinstance(window, dict):
        raise ConfigError("estimator.window must be an object or null")

    pspec = raw["prediction"] if "prediction" in raw else base["prediction"]
    source = base["source"]
    quantities = tuple(est.get("quantities") or (MEASURE_QUANTITIES if source == "oracle" else SET_QUANTITIES))
    bad = [q for q in quantities if q not in QUANTITIES]
    if bad:
        raise ConfigError(f"unknown quantities {bad}")
    if source == "oracle" and any(q in SET_QUANTITIES for q in quantities):
        raise ConfigError("synthetic oracles estimate measure spectra only")
    if source == "cloud" and any(q in MEASURE_QUANTITIES for q in quantities):
        raise ConfigError("cloud presets estimate set spectra only")

    tol = tolerance if tolerance is not None else raw.get("tolerance")
    if tol is not None and not float(tol) >= 0:
        raise ConfigError("tolerance must be non-negative")
    try:
        seed_value = int(seed if seed is not None else raw.get("seed", 0))
    except (TypeError, ValueError):
        raise ConfigError("seed must be an integer") from None
    return RunConfig(
        preset=name, params=params, seed=seed_value,
        theta_grid=theta_grid_from(est.get("theta_grid")),
        window=window, centers=est.get("centers", "auto"), raw=bool(est.get("raw", False)),
        quantities=quantities, prediction=prediction_from(pspec), prediction_spec=pspec,
        out_dir=Path(out or outs.get("dir") or "out"),
        tolerance=None if tol is None else float(tol), source=source,
        inputs={k: outs[k] for k in ("cloud", "estimate", "prediction") if k in outs},
    )
