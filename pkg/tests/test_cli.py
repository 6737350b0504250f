import json
import subprocess
import sys
from pathlib import Path

import pytest

from cyclegames.cli import ConfigError, ScenarioConfig, main, run_scenario

REPO = Path(__file__).resolve().parents[1]


def write_config(tmp_path, payload):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(payload))
    return str(path)


def adaptive_payload(**overrides):
    payload = {
        "name": "classical-k2-adaptive",
        "process": "classical",
        "k": 2,
        "strategy": "adaptive-basis",
        "checks": ["game"],
        "seed": 1,
        "expect_p_win": 1.0,
        "expect_verdict": "violates-fixed-order",
    }
    payload.update(overrides)
    return payload


class TestConfigValidation:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="frobnicate"):
            ScenarioConfig.from_dict(adaptive_payload(frobnicate=1))

    def test_unknown_check_rejected(self):
        with pytest.raises(ConfigError, match="checks"):
            ScenarioConfig.from_dict(adaptive_payload(checks=["game", "teleport"]))

    def test_k_out_of_range(self):
        with pytest.raises(ConfigError, match="'k'"):
            ScenarioConfig.from_dict(adaptive_payload(k=9))

    def test_circuit_needs_sparse(self):
        with pytest.raises(ConfigError, match="circuit"):
            ScenarioConfig.from_dict(adaptive_payload(checks=["circuit"]))

    def test_w3_strategy_mismatch(self):
        with pytest.raises(ConfigError, match="strategy"):
            ScenarioConfig.from_dict(adaptive_payload(strategy="w3-adaptive"))

    def test_nonadaptive_state_spec(self):
        cfg = ScenarioConfig.from_dict(
            adaptive_payload(
                strategy={"kind": "nonadaptive", "control": "basis:0"},
                expect_p_win=None,
                expect_verdict="within-bound",
            )
        )
        assert cfg.strategy["control"] == "basis:0"

    def test_bad_state_spec(self):
        with pytest.raises(ConfigError, match="strategy.control"):
            ScenarioConfig.from_dict(
                adaptive_payload(strategy={"kind": "nonadaptive", "control": "vortex"})
            )


class TestRunScenario:
    def test_adaptive_game_passes(self):
        cfg = ScenarioConfig.from_dict(adaptive_payload())
        outcomes = run_scenario(cfg)
        assert all(out.passed for out in outcomes)
        assert outcomes[0].rows

    def test_expectation_mismatch_fails(self):
        cfg = ScenarioConfig.from_dict(adaptive_payload(expect_p_win=0.9))
        outcomes = run_scenario(cfg)
        assert not outcomes[0].passed


class TestCliProcess:
    def test_run_exit_zero_and_csv(self, tmp_path):
        config = write_config(tmp_path, adaptive_payload())
        csv_path = tmp_path / "out.csv"
        code = main(["run", config, "--csv", str(csv_path), "--quiet"])
        assert code == 0
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "scenario,process,k,s,x,a,probability"
        assert len(lines) == 1 + 8  # 2 slots x 2 bits x 2 guesses

    def test_csv_byte_stable(self, tmp_path):
        config = write_config(tmp_path, adaptive_payload())
        paths = []
        for tag in ("a", "b"):
            csv_path = tmp_path / f"{tag}.csv"
            assert main(["run", config, "--csv", str(csv_path), "--quiet"]) == 0
            paths.append(csv_path.read_bytes())
        assert paths[0] == paths[1]

    def test_run_exit_one_on_failed_expectation(self, tmp_path):
        config = write_config(tmp_path, adaptive_payload(expect_p_win=0.9))
        assert main(["run", config, "--quiet"]) == 1

    def test_run_exit_two_on_unknown_field(self, tmp_path, capsys):
        config = write_config(tmp_path, adaptive_payload(gremlin=True))
        assert main(["run", config, "--quiet"]) == 2
        assert "gremlin" in capsys.readouterr().err

    def test_run_exit_two_on_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["run", str(path)]) == 2

    def test_list_scenarios(self, capsys):
        assert main(["list-scenarios"]) == 0
        payload = json.loads(capsys.readouterr().out)
        names = {entry["name"] for entry in payload}
        assert "sparse-k3-adaptive" in names
        assert "cycle-n3-polytope" in names

    def test_shipped_configs_parse(self):
        for path in (REPO / "configs").glob("*.json"):
            raw = json.loads(path.read_text())
            ScenarioConfig.from_dict(raw)

    def test_shipped_facet_config_runs(self, tmp_path):
        code = main(["run", str(REPO / "configs" / "facet_n3.json"), "--quiet"])
        assert code == 0

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "cyclegames.cli", "list-scenarios"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0


class TestReproduceAll:
    def test_reduced_trials_pass(self, tmp_path, capsys):
        from cyclegames.cli import reproduce_all

        csv_path = tmp_path / "all.csv"
        code = reproduce_all(seed=3, trials=2, csv_path=str(csv_path), quiet=True)
        out = capsys.readouterr().out
        assert code == 0, out
        assert "checks passed" in out
        header = csv_path.read_text().splitlines()[0]
        assert header == "scenario,process,k,s,x,a,probability"
