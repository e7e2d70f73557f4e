"""Command-line frontend: config handling, outputs, determinism, and
exit codes."""

import json
import math
import os

import numpy as np
import pytest

from aoi_lab.cli import (
    EXIT_ACCEPTANCE,
    EXIT_CALIBRATION,
    EXIT_OK,
    EXIT_PARTIAL_SWEEP,
    EXIT_USAGE,
    GridRange,
    RunConfig,
    UsageError,
    load_config,
    main,
)

BASE_CONFIG = {
    "link": {"kind": "shifted-lognormal", "x_min": 0.5, "mu": 1.0, "s": 0.75},
    "correlation": {"mode": "ou", "c": 10.0},
    "tau": 2.0,
    "t_grid": {"start": 1.0, "stop": 7.0, "step": 2.0},
    "x_grid": {"start": 0.0, "stop": 4.0, "step": 0.2},
    "delta": 0.2,
    "simulation": {"n_paths": 2000, "seed": 7, "n_saved_paths": 3},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(BASE_CONFIG))
    return str(path)


class TestGridRange:
    def test_inclusive_endpoint(self):
        assert np.allclose(GridRange(0.0, 1.0, 0.25).values(), [0, 0.25, 0.5, 0.75, 1.0])

    def test_endpoint_within_half_step(self):
        # 0..0.3 step 0.1 must include 0.3 despite float residue.
        values = GridRange(0.0, 0.3, 0.1).values()
        assert values.size == 4
        assert values[-1] == pytest.approx(0.3)

    def test_rejects_nonpositive_step(self):
        with pytest.raises(UsageError):
            GridRange(0.0, 1.0, 0.0)


class TestRunConfig:
    def test_roundtrip_through_dict(self):
        cfg = RunConfig.from_dict(BASE_CONFIG)
        assert RunConfig.from_dict(cfg.to_dict()) == cfg

    def test_requires_exactly_one_marginal_spec(self):
        bad = json.loads(json.dumps(BASE_CONFIG))
        bad["link"].update({"mu_hat": 0.1, "s_hat": 1.0})
        with pytest.raises(UsageError):
            RunConfig.from_dict(bad)
        del bad["link"]["mu"], bad["link"]["s"]
        RunConfig.from_dict(bad)  # direct parameters alone are fine

    def test_ou_requires_exactly_one_rate_spec(self):
        bad = json.loads(json.dumps(BASE_CONFIG))
        bad["correlation"]["kappa"] = 0.1
        with pytest.raises(UsageError):
            RunConfig.from_dict(bad)

    def test_degenerate_modes_take_no_kappa(self):
        bad = json.loads(json.dumps(BASE_CONFIG))
        bad["correlation"] = {"mode": "iid", "kappa": 0.1}
        with pytest.raises(UsageError):
            RunConfig.from_dict(bad)

    def test_model_construction_calibrates(self):
        model = RunConfig.from_dict(BASE_CONFIG).model()
        assert model.link.mu_hat == pytest.approx(-1.2824746787307684, rel=1e-10)
        assert model.correlation.kappa == pytest.approx(0.06700892, rel=1e-6)


class TestOverrides:
    def test_set_overrides_nested_keys(self, config_path, tmp_path):
        class Args:
            config = config_path
            set = ["tau=1.5", "correlation.c=5"]
            out = str(tmp_path / "o")
            seed = 99
            threads = None

        cfg = load_config(Args)
        assert cfg.tau == 1.5 and cfg.c == 5 and cfg.seed == 99

    def test_set_parses_inf(self, config_path, tmp_path):
        class Args:
            config = config_path
            set = ["correlation.mode=frozen", "correlation.c=inf"]
            out = None
            seed = None
            threads = None

        cfg = load_config(Args)
        assert cfg.mode == "frozen" and math.isinf(cfg.c)

    def test_env_var_sets_threads(self, config_path, monkeypatch):
        monkeypatch.setenv("AOI_LAB_THREADS", "6")

        class Args:
            config = config_path
            set = None
            out = None
            seed = None
            threads = None

        assert load_config(Args).threads == 6

    def test_flag_beats_env_var(self, config_path, monkeypatch):
        monkeypatch.setenv("AOI_LAB_THREADS", "6")

        class Args:
            config = config_path
            set = None
            out = None
            seed = None
            threads = 2

        assert load_config(Args).threads == 2


class TestCommands:
    def test_calibrate_writes_report(self, config_path, tmp_path, capsys):
        out = str(tmp_path / "cal")
        assert main(["calibrate", "--config", config_path, "--out", out]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["mu_hat"] == pytest.approx(-1.2824746787307684, rel=1e-10)
        assert report["kappa"] == pytest.approx(0.06700892, rel=1e-6)
        assert abs(report["mean_residual"]) < 1e-12
        assert os.path.exists(os.path.join(out, "calibration.json"))

    def test_exact_writes_all_artifacts(self, config_path, tmp_path):
        out = tmp_path / "exact"
        assert main(["exact", "--config", config_path, "--out", str(out)]) == EXIT_OK
        for name in ("ccdf.csv", "heatmap.csv", "timeavg.csv", "percentiles.csv",
                     "meta.json"):
            assert (out / name).exists(), name
        lines = (out / "ccdf.csv").read_text().strip().split("\n")
        assert lines[0] == "t,x,ccdf"
        # 4 t-values x 21 x-values, row-major.
        assert len(lines) == 1 + 4 * 21
        meta = json.loads((out / "meta.json").read_text())
        assert RunConfig.from_dict(meta["config"]) == RunConfig.from_dict(
            json.load(open(config_path)) | {"out": str(out)}
        )

    def test_simulate_is_deterministic(self, config_path, tmp_path):
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        for out in (out1, out2):
            assert main(["simulate", "--config", config_path, "--out", str(out)]) == EXIT_OK
        assert (out1 / "empirical_ccdf.csv").read_bytes() == (
            out2 / "empirical_ccdf.csv"
        ).read_bytes()
        assert (out1 / "paths.csv").read_text().startswith("path,t,age\n")

    def test_exact_is_thread_invariant(self, config_path, tmp_path):
        outs = []
        for threads in ("1", "3"):
            out = tmp_path / f"t{threads}"
            assert main(
                ["exact", "--config", config_path, "--out", str(out),
                 "--threads", threads]
            ) == EXIT_OK
            outs.append((out / "ccdf.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_compare_passes_on_consistent_model(self, config_path, tmp_path, capsys):
        out = str(tmp_path / "cmp")
        code = main(["compare", "--config", config_path, "--out", out,
                     "--set", "simulation.n_paths=20000"])
        report = json.loads(capsys.readouterr().out)
        assert code == EXIT_OK, report
        assert report["z_fraction_within_3"] >= 0.99
        assert all(step["passed"] for step in report["dominance"])

    def test_sweep_writes_rows_and_routes_limits(self, config_path, tmp_path):
        out = tmp_path / "sweep"
        code = main(
            ["sweep", "--config", config_path, "--out", str(out),
             "--param", "c=0,10,inf", "--set", "quadrature.m=128"]
        )
        assert code == EXIT_OK
        lines = (out / "percentiles.csv").read_text().strip().split("\n")
        assert lines[0] == "link,c,tau,s,p10,p25,p50,p75,p90"
        assert len(lines) == 4
        assert lines[1].split(",")[1] == "0"
        assert lines[3].split(",")[1] == "inf"

    def test_sweep_partial_failure_exit_code(self, config_path, tmp_path):
        out = tmp_path / "sweep_fail"
        code = main(
            ["sweep", "--config", config_path, "--out", str(out),
             "--param", "c=-1,10", "--set", "quadrature.m=128"]
        )
        assert code == EXIT_PARTIAL_SWEEP
        meta = json.loads((out / "meta.json").read_text())
        assert len(meta["failures"]) == 1
        # The good row is still produced.
        assert len((out / "percentiles.csv").read_text().strip().split("\n")) == 2


class TestExitCodes:
    def test_unknown_subcommand_is_usage_error(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_missing_config_file_is_usage_error(self):
        assert main(["exact", "--config", "/nonexistent/cfg.json"]) == EXIT_USAGE

    def test_conflicting_config_is_usage_error(self, config_path):
        assert main(
            ["exact", "--config", config_path, "--set", "correlation.kappa=0.1"]
        ) == EXIT_USAGE

    def test_infeasible_target_is_calibration_error(self, config_path):
        assert main(
            ["calibrate", "--config", config_path, "--set", "link.s=0"]
        ) == EXIT_CALIBRATION

    def test_calibrate_without_targets_is_calibration_error(self, tmp_path):
        cfg = json.loads(json.dumps(BASE_CONFIG))
        cfg["link"] = {"kind": "shifted-lognormal", "x_min": 0.5,
                       "mu_hat": -1.28, "s_hat": 1.09}
        cfg["correlation"] = {"mode": "ou", "kappa": 0.067}
        path = tmp_path / "direct.json"
        path.write_text(json.dumps(cfg))
        assert main(["calibrate", "--config", str(path)]) == EXIT_CALIBRATION
