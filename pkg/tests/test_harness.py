import csv
import json

import numpy as np
import pytest

from aslab.harness import config as CF
from aslab.harness import pipeline as P
from aslab.harness.cli import main
from aslab.harness.plot import render_svg
from aslab.harness.selftest import run_selftest


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def lattice_cfg(tmp_path):
    return _write(tmp_path / "run.json", {
        "schema": 1,
        "generator": {"preset": "zlattice1", "params": {"n": 20000}},
        "estimator": {"theta_grid": {"start": 0.1, "stop": 0.9, "step": 0.1}},
        "outputs": {"dir": str(tmp_path / "out")},
    })


class TestConfig:
    def test_theta_grid_forms(self):
        assert len(CF.theta_grid_from(None)) == 33
        assert CF.theta_grid_from({"start": 0.1, "stop": 0.9, "step": 0.1})[-1] == pytest.approx(0.9)
        assert CF.theta_grid_from([0.2, 0.4]) == (0.2, 0.4)

    @pytest.mark.parametrize("bad", [[0.0, 0.5], [0.5, 0.4], [], {"start": 0.1, "stop": 0.5}])
    def test_theta_grid_rejected(self, bad):
        with pytest.raises(CF.ConfigError):
            CF.theta_grid_from(bad)

    def test_schema_required(self, tmp_path):
        with pytest.raises(CF.ConfigError):
            CF.load_config(_write(tmp_path / "c.json", {"schema": 2, "generator": {"preset": "zlattice1"}}))

    def test_overrides(self, lattice_cfg, tmp_path):
        cfg = CF.load_config(lattice_cfg, out=str(tmp_path / "x"), seed=7, tolerance=0.2)
        assert cfg.seed == 7 and cfg.default_tolerance == 0.2
        assert cfg.out_dir == tmp_path / "x"

    def test_params_of_other_preset_dropped(self, lattice_cfg):
        cfg = CF.load_config(lattice_cfg, preset="sequence")
        assert cfg.params == CF.PRESETS["sequence"]["params"]

    def test_quantities_must_match_source(self, tmp_path):
        path = _write(tmp_path / "c.json", {"schema": 1, "generator": {"preset": "synthetic"},
                                            "estimator": {"quantities": ["set_assouad"]}})
        with pytest.raises(CF.ConfigError):
            CF.load_config(path)

    def test_invalid_prediction(self, tmp_path):
        path = _write(tmp_path / "c.json", {"schema": 1, "generator": {"preset": "zlattice1"},
                                            "prediction": {"kind": "kleinian", "delta": 0.8,
                                                           "k_min": 1, "k_max": 2}})
        assert main(["predict", "--config", path]) == 2


class TestPipeline:
    def test_full_run_and_determinism(self, lattice_cfg, tmp_path, capsys):
        out = tmp_path / "out"
        for cmd in ("generate", "estimate", "predict"):
            assert main([cmd, "--config", lattice_cfg]) == 0
        first = (out / "estimate.csv").read_bytes()
        first_json = (out / "estimate.json").read_bytes()
        assert len(_rows(out / "estimate.csv")) == 9
        assert main(["estimate", "--config", lattice_cfg]) == 0
        assert (out / "estimate.csv").read_bytes() == first
        assert (out / "estimate.json").read_bytes() == first_json
        assert main(["compare", "--config", lattice_cfg]) == 0
        report = json.loads((out / "comparison.json").read_text())
        assert report["counts"]["pass"] > 0
        assert main(["plot", "--config", lattice_cfg]) == 0
        svg = (out / "spectra.svg").read_text()
        assert svg.startswith("<svg") and 'class="set_assouad"' in svg

    def test_compare_detects_bad_estimate(self, lattice_cfg, tmp_path):
        out = tmp_path / "out"
        main(["predict", "--config", lattice_cfg])
        rows = _rows(out / "prediction.csv")
        with open(out / "estimate.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "set_assouad"])
            for r in rows:
                w.writerow([r["theta"], float(r["set_assouad"]) + 0.3])
        assert main(["compare", "--config", lattice_cfg]) == 1

    def test_theta_mismatch(self, lattice_cfg, tmp_path, capsys):
        out = tmp_path / "out"
        main(["predict", "--config", lattice_cfg])
        (out / "estimate.csv").write_text("theta,set_assouad\n0.5,1.0\n")
        assert main(["compare", "--config", lattice_cfg]) == 2
        err = capsys.readouterr().err.strip().splitlines()
        assert len(err) == 1 and err[0].startswith("ERR:")

    def test_skipped_rows_are_not_failures(self, tmp_path):
        (tmp_path / "e.csv").write_text("theta,set_assouad\n0.1,nan\n0.5,1.0\n")
        (tmp_path / "p.csv").write_text("theta,set_assouad\n0.1,0.5\n0.5,1.0\n")
        rep = P.compare_files(tmp_path / "e.csv", tmp_path / "p.csv", 0.1)
        assert rep.ok
        assert [r["status"] for r in rep.rows] == ["skipped", "pass"]

    def test_window_violation_exit_code(self, tmp_path, capsys):
        path = _write(tmp_path / "c.json", {
            "schema": 1, "generator": {"preset": "zlattice1", "params": {"n": 2000}},
            "estimator": {"window": {"r_min": 1e-9, "r_max": 0.5}},
            "outputs": {"dir": str(tmp_path / "o")}})
        assert main(["estimate", "--config", path]) == 3
        assert capsys.readouterr().err.startswith("ERR: window")

    def test_orbit_explosion_exit_code(self, tmp_path):
        path = _write(tmp_path / "c.json", {
            "schema": 1, "generator": {"preset": "apollonian", "params": {"eps_proj": 2e-3, "depth": 60,
                                                                         "cap": 200}},
            "outputs": {"dir": str(tmp_path / "o")}})
        assert main(["generate", "--config", path]) == 4
        assert (tmp_path / "o" / "cloud.csv").exists()

    def test_unknown_preset_and_usage(self, capsys):
        assert main(["generate", "--preset", "nope"]) == 2
        assert main(["frobnicate"]) == 2
        err = capsys.readouterr().err.strip().splitlines()
        assert all(line.startswith("ERR:") for line in err) and len(err) == 2

    def test_synthetic_round_trip(self, tmp_path):
        path = _write(tmp_path / "c.json", {
            "schema": 1, "generator": {"preset": "synthetic", "params": {"depth_points": 120}},
            "estimator": {"theta_grid": [0.1, 0.3, 0.5, 0.7, 0.9]},
            "outputs": {"dir": str(tmp_path / "o")}})
        for cmd in ("generate", "estimate", "predict"):
            assert main([cmd, "--config", path]) == 0
        assert main(["compare", "--config", path]) == 0


class TestPlot:
    def test_nothing_to_plot(self, tmp_path):
        assert main(["plot", "--out", str(tmp_path)]) == 2

    def test_styles(self, tmp_path):
        (tmp_path / "p.csv").write_text("theta,set_assouad,measure_lower\n0.25,1.0,0.5\n0.5,1.2,0.6\n")
        svg = render_svg(tmp_path / "p.csv")
        assert 'class="measure_lower"' in svg and 'stroke-dasharray="6 4"' in svg
        assert svg == render_svg(tmp_path / "p.csv")


class TestSelftest:
    def test_clean_run_passes(self):
        assert run_selftest()["ok"]

    @pytest.mark.parametrize("name", ["kleinian_weight", "julia_weight", "global_measure"])
    def test_mutations_are_caught(self, name):
        summary = run_selftest(name)
        assert not summary["ok"]
        assert summary["mutation"] == name

    def test_cli_exit_codes(self, capsys):
        assert main(["selftest"]) == 0
        assert json.loads(capsys.readouterr().out)["ok"] is True
        assert main(["selftest", "--mutate", "global_measure"]) == 1
