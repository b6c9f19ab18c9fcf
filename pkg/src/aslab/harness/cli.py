"""Command line: aslab generate|estimate|predict|compare|plot|selftest.

Exit codes: 0 success; 1 failed comparison or self-test (or an unexpected
error); 2 bad input (unknown preset, invalid parameters, theta-grid
mismatch, nothing to plot); 3 scale window violating the resolution safety
factor; 4 orbit point cap exceeded (any partial cloud is still written).  Every error
prints exactly one line starting with ``ERR:`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from ..estimators.grid import WindowError
from ..formulas import ParameterError
from ..generators.clouds import CloudError
from ..generators.kleinian import OrbitExplosion
from ..generators.oracles import OracleError
from . import pipeline
from .config import ConfigError, load_config
from .plot import write_svg
from .selftest import MUTATIONS, run_selftest

COMMANDS = ("generate", "estimate", "predict", "compare", "plot", "selftest")


def build_parser():
    p = argparse.ArgumentParser(prog="aslab", description="Assouad-type spectra: predict, estimate, compare.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="run config JSON (schema 1)")
    p.add_argument("--preset", help="generator preset, overrides the config")
    p.add_argument("--out", help="output directory, overrides the config")
    p.add_argument("--seed", type=int, help="random seed, overrides the config")
    p.add_argument("--tolerance", type=float, help="compare tolerance per theta")
    p.add_argument("--estimate", help="compare/plot: estimate CSV (default OUT/estimate.csv)")
    p.add_argument("--prediction", help="compare/plot: prediction CSV (default OUT/prediction.csv)")
    p.add_argument("--mutate", choices=sorted(MUTATIONS), help="selftest: perturb one formula first")
    return p


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def _say(obj):
    print(json.dumps(obj, sort_keys=True, default=str))


def _run(args):
    if args.command == "selftest":
        summary = run_selftest(args.mutate)
        _say(summary)
        return 0 if summary["ok"] else 1

    # plot and compare only need file paths when no preset is known
    if args.command in ("compare", "plot") and not (args.config or args.preset):
        from pathlib import Path
        out = Path(args.out or "out")
        est = args.estimate or str(out / pipeline.ESTIMATE_CSV)
        pred = args.prediction or str(out / pipeline.PREDICTION_CSV)
        if args.command == "plot":
            path = write_svg(out / pipeline.PLOT_SVG, pred, est)
            _say({"plot": str(path)})
            return 0
        rep = pipeline.compare_files(est, pred, 0.1 if args.tolerance is None else args.tolerance)
        return _report(rep, out)

    cfg = load_config(args.config, args.preset, args.out, args.seed, args.tolerance)
    t0 = time.perf_counter()
    if args.command == "generate":
        info = pipeline.cmd_generate(cfg)
    elif args.command == "estimate":
        info = pipeline.cmd_estimate(cfg)
    elif args.command == "predict":
        info = pipeline.cmd_predict(cfg)
    elif args.command == "compare":
        rep = pipeline.cmd_compare(cfg, args.estimate, args.prediction, args.tolerance)
        return _report(rep, None)
    else:
        est = args.estimate or str(cfg.path(pipeline.ESTIMATE_CSV))
        pred = args.prediction or str(cfg.path(pipeline.PREDICTION_CSV))
        info = {"plot": str(write_svg(cfg.path(pipeline.PLOT_SVG), pred, est, title=cfg.preset))}
    info["seconds"] = round(time.perf_counter() - t0, 3)
    _say(info)
    return 0


def _report(rep, out):
    if out is not None:
        pipeline._write_json(out / pipeline.COMPARISON_JSON, rep.to_dict())
    counts = rep.to_dict()["counts"]
    for r in rep.failures:
        print(f"FAIL theta={r['theta']!r} {r['quantity']}: predicted {r['predicted']!r}, "
              f"estimated {r['estimated']!r}, error {r['abs_error']:.4g} > {rep.tolerance}")
    _say({"ok": rep.ok, "counts": counts, "tolerance": rep.tolerance})
    return 0 if rep.ok else 1


def main(argv=None):
    parser = build_parser()
    parser.__class__ = _Parser
    try:
        args = parser.parse_args(argv)
        return _run(args)
    except _Usage as exc:
        code, msg = 2, f"usage: {exc}"
    except OrbitExplosion as exc:
        note = " (partial cloud written)" if exc.partial is not None else ""
        code, msg = 4, f"orbit explosion: {exc}{note}"
    except WindowError as exc:
        code, msg = 3, f"window: {exc}"
    except pipeline.ThetaGridMismatch as exc:
        code, msg = 2, f"theta grid mismatch: {exc}"
    except pipeline.PlotInputError as exc:
        code, msg = 2, f"plot: {exc}"
    except (ConfigError, ParameterError, CloudError, OracleError, FileNotFoundError) as exc:
        code, msg = 2, str(exc)
    except KeyboardInterrupt:
        code, msg = 130, "interrupted"
    except Exception as exc:  # the single-line contract covers unexpected failures too
        code, msg = 1, f"{type(exc).__name__}: {exc}"
    print("ERR: " + " ".join(str(msg).split()), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
