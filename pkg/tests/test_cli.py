import csv
import json

import pytest

from pocrm.cli import (EXIT_CONFIG, EXIT_DOMAIN, EXIT_OK, ConfigError,
                       RunConfig, main)

A1 = "0.10,0.27,0.32,0.37,0.45,0.50,0.54,0.59,0.64"


def run(tmp_path, *argv):
    return main(["--out-dir", str(tmp_path), *argv])


class TestRunConfig:
    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"rows": 3, "colz": 3}))
        with pytest.raises(ConfigError, match="colz"):
            RunConfig.load(str(cfg), {})

    def test_invalid_json_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        with pytest.raises(ConfigError, match="valid JSON"):
            RunConfig.load(str(cfg), {})

    def test_missing_file_rejected(self):
        with pytest.raises(ConfigError, match="not found"):
            RunConfig.load("/nonexistent/cfg.json", {})

    def test_field_specific_messages(self):
        with pytest.raises(ConfigError, match="'skeleton'\\[1\\]"):
            RunConfig.load(None, {"skeleton": [0.3, 0.2]})
        with pytest.raises(ConfigError, match="'theta0'"):
            RunConfig.load(None, {"theta0": 1.5})
        with pytest.raises(ConfigError, match="either"):
            RunConfig.load(None, {"scenario": 1, "scenario_csv": "x.csv"})

    def test_overrides_beat_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 1, "replicates": 10}))
        loaded = RunConfig.load(str(cfg), {"seed": 9})
        assert loaded.seed == 9 and loaded.replicates == 10

    def test_env_seed_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("POCRM_SEED", "77")
        assert RunConfig.load(None, {"seed": 3}).seed == 77
        monkeypatch.setenv("POCRM_SEED", "abc")
        with pytest.raises(ConfigError, match="POCRM_SEED"):
            RunConfig.load(None, {})


class TestOrders:
    def test_enumerate_writes_all_42(self, tmp_path, capsys):
        assert run(tmp_path, "orders", "enumerate") == EXIT_OK
        assert capsys.readouterr().out.strip() == "42"
        with (tmp_path / "orderings.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + 42 * 9
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert "orderings.csv" in manifest["artifacts"]
        assert manifest["command"] == "orders"

    def test_select_agnostic_picks_six(self, tmp_path, capsys):
        assert run(tmp_path, "orders", "select", "--mode", "agnostic") == EXIT_OK
        out = capsys.readouterr().out
        assert len(out.split("n.consis")[0].split(":")[1].split()) == 6
        assert (tmp_path / "coverage.csv").exists()
        assert (tmp_path / "selection.csv").exists()

    def test_select_specific_picks_three(self, tmp_path, capsys):
        assert run(tmp_path, "orders", "select", "--mode", "specific") == EXIT_OK
        out = capsys.readouterr().out
        assert len(out.split("n.consis")[0].split(":")[1].split()) == 3


class TestConsistency:
    def test_check_writes_report(self, tmp_path, capsys):
        code = run(tmp_path, "--skeleton", A1, "--scenario", "5",
                   "--n-draws", "2000", "consistency", "check")
        assert code == EXIT_OK
        doc = json.loads((tmp_path / "consistency.json").read_text())
        assert doc["verdict"] is True
        assert "consistent" in capsys.readouterr().out

    def test_assert_consistent_exit_code(self, tmp_path, capsys):
        bad = "0.10,0.20,0.30,0.40,0.45,0.50,0.54,0.59,0.64"
        code = run(tmp_path, "--skeleton", bad, "--scenario", "5",
                   "--n-draws", "2000", "consistency", "check",
                   "--assert-consistent")
        assert code == EXIT_DOMAIN
        capsys.readouterr()

    def test_missing_skeleton_is_config_error(self, tmp_path, capsys):
        code = run(tmp_path, "--scenario", "5", "consistency", "check")
        assert code == EXIT_CONFIG
        assert "skeleton" in capsys.readouterr().err


class TestSimulate:
    def test_pcs_artifacts(self, tmp_path, capsys):
        code = run(tmp_path, "--skeleton", A1, "--scenario", "5",
                   "--replicates", "20", "--n-patients", "20",
                   "simulate", "pcs")
        assert code == EXIT_OK
        with (tmp_path / "pcs.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:6] == ["scenario_id", "design_id", "N",
                               "replicates", "pcs", "mc_se"]
        assert len(rows) == 2
        assert "pcs:" in capsys.readouterr().out

    def test_curve_requires_ascending_grid(self, tmp_path, capsys):
        code = run(tmp_path, "--skeleton", A1, "--scenario", "5",
                   "--replicates", "5", "simulate", "curve",
                   "--n-grid", "30", "10")
        assert code == EXIT_DOMAIN
        capsys.readouterr()

    def test_curve_artifacts(self, tmp_path, capsys):
        code = run(tmp_path, "--skeleton", A1, "--scenario", "5",
                   "--replicates", "10", "simulate", "curve",
                   "--n-grid", "10", "20")
        assert code == EXIT_OK
        with (tmp_path / "pcs_curve.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert [r[2] for r in rows[1:]] == ["10", "20"]
        capsys.readouterr()

    def test_scenario_csv_input(self, tmp_path, capsys):
        sc = tmp_path / "custom.csv"
        sc.write_text("0.1,0.2,0.3\n0.2,0.3,0.4\n0.3,0.4,0.5\n")
        code = run(tmp_path, "--skeleton", A1, "--scenario-csv", str(sc),
                   "--replicates", "10", "--n-patients", "15",
                   "simulate", "pcs")
        assert code == EXIT_OK
        with (tmp_path / "pcs.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[1][0] == "custom"
        capsys.readouterr()


class TestBenchmark:
    def test_benchmark_artifacts(self, tmp_path, capsys):
        code = run(tmp_path, "--scenario", "1", "--replicates", "50",
                   "--n-patients", "30", "benchmark")
        assert code == EXIT_OK
        with (tmp_path / "benchmark.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[1][1] == "po-benchmark"
        capsys.readouterr()


class TestReproduce:
    def test_table3_tiny(self, tmp_path, capsys):
        code = run(tmp_path, "--replicates", "5", "reproduce", "table3")
        assert code == EXIT_OK
        with (tmp_path / "table3.csv").open() as fh:
            rows = list(csv.reader(fh))
        # 9 scenarios x (benchmark + wages6 + consistent6)
        assert len(rows) == 1 + 9 * 3
        assert {r[1] for r in rows[1:]} == {"benchmark", "wages6",
                                            "consistent6"}
        out = capsys.readouterr().out
        assert out.count("scenario") == 9


class TestManifest:
    def test_manifest_records_config_and_version(self, tmp_path, capsys):
        run(tmp_path, "--seed", "4", "orders", "enumerate")
        capsys.readouterr()
        doc = json.loads((tmp_path / "manifest.json").read_text())
        assert doc["config"]["seed"] == 4
        assert doc["pocrm_version"]
        assert doc["wall_time_s"] >= 0
