"""Tests for the command-line interface."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from causalsynth.cli import cli
from causalsynth.oracles import OracleResult

FAST_CONFIG = """\
sampler:
  m: 5
  n_iter: 30
  n_burn: 10
  seed: 9
agents:
  knn:
    subsample_reps: 10
"""


def error_line(output: str) -> dict:
    """The JSON diagnostic among the command's output lines."""
    lines = [line for line in output.splitlines() if line.startswith("{")]
    assert lines, output
    return json.loads(lines[-1])


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def workspace(tmp_path: Path) -> Path:
    """A data file, a fast config and a matching plug-in agent file."""
    rng = np.random.default_rng(0)
    n = 40
    x1, x2 = rng.standard_normal(n), rng.standard_normal(n)
    t = np.arange(n) % 2
    tau = 1.0 + x1
    pd.DataFrame(
        {
            "y": x2 + t * tau + 0.3 * rng.standard_normal(n),
            "t": t,
            "pi": np.full(n, 0.5),
            "x1": x1,
            "x2": x2,
        }
    ).to_csv(tmp_path / "data.csv", index=False)
    pd.DataFrame(
        {"tau_hat_1": tau + 0.2 * rng.standard_normal(n), "se_1": np.full(n, 0.2)}
    ).to_csv(tmp_path / "agents.csv", index=False)
    (tmp_path / "config.yaml").write_text(FAST_CONFIG)
    return tmp_path


def synthesize_args(ws: Path, *extra: str) -> list[str]:
    return [
        "synthesize",
        "--data",
        str(ws / "data.csv"),
        "--config",
        str(ws / "config.yaml"),
        "--out",
        str(ws / "out"),
        *extra,
    ]


class TestSynthesizeCommand:
    """Tests for `causalsynth synthesize`."""

    def test_writes_outputs(self, runner, workspace):
        result = runner.invoke(
            cli, synthesize_args(workspace, "--agents", str(workspace / "agents.csv"))
        )
        assert result.exit_code == 0, result.output
        assert "Synthesized 1 agent(s) over 40 rows" in result.output
        for name in ("tau_summary.csv", "coefficients.csv", "chain_diagnostics.json"):
            assert (workspace / "out" / name).exists()
        assert len(pd.read_csv(workspace / "out" / "tau_summary.csv")) == 40

    def test_fit_agents(self, runner, workspace):
        result = runner.invoke(cli, synthesize_args(workspace, "--fit-agents", "lm,knn"))
        assert result.exit_code == 0, result.output
        agents = pd.read_csv(workspace / "out" / "agents.csv")
        assert list(agents.columns) == ["tau_hat_1", "se_1", "tau_hat_2", "se_2"]

    def test_needs_some_agent(self, runner, workspace):
        result = runner.invoke(cli, synthesize_args(workspace))
        assert result.exit_code == 2
        assert "--fit-agents" in result.output

    def test_unknown_agent_is_config_error(self, runner, workspace):
        result = runner.invoke(cli, synthesize_args(workspace, "--fit-agents", "forest"))
        assert result.exit_code == 2
        payload = error_line(result.output)
        assert payload["error"] == "ConfigError"
        assert "lm" in payload["details"]["available"]

    def test_invalid_config_reports_line(self, runner, workspace):
        (workspace / "config.yaml").write_text("sampler:\n  n_iter: 10\n  n_burn: 0\n  m: 0\n")
        result = runner.invoke(cli, synthesize_args(workspace, "--fit-agents", "lm"))
        assert result.exit_code == 2
        payload = error_line(result.output)
        assert payload["details"]["field"] == "sampler.m"
        assert payload["details"]["line"] == 4

    def test_constant_covariate_is_encoding_error(self, runner, workspace):
        frame = pd.read_csv(workspace / "data.csv")
        frame["x3"] = 1.5
        frame.to_csv(workspace / "data.csv", index=False)
        result = runner.invoke(cli, synthesize_args(workspace, "--fit-agents", "lm"))
        assert result.exit_code == 3
        assert error_line(result.output)["error"] == "EncodingError"


class TestPredictCommand:
    """Tests for `causalsynth predict`."""

    def test_predicts_from_saved_chain(self, runner, workspace):
        result = runner.invoke(
            cli, synthesize_args(workspace, "--agents", str(workspace / "agents.csv"))
        )
        assert result.exit_code == 0, result.output
        pd.DataFrame(
            {"x1": [0.0, 1.0], "x2": [0.5, -0.5], "tau_hat_1": [1.0, 2.0], "se_1": [0.2, 0.2]}
        ).to_csv(workspace / "points.csv", index=False)

        out = workspace / "pred.csv"
        args = [
            "predict",
            "--chain",
            str(workspace / "out" / "chain"),
            "--points",
            str(workspace / "points.csv"),
            "--out",
            str(out),
        ]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["mean", "sd", "lo95", "hi95", "width"]
        assert len(frame) == 2

        runner.invoke(cli, [*args, "--out", str(workspace / "again.csv")])
        assert out.read_bytes() == (workspace / "again.csv").read_bytes()

    def test_missing_chain(self, runner, workspace):
        pd.DataFrame({"x1": [0.0]}).to_csv(workspace / "points.csv", index=False)
        result = runner.invoke(
            cli,
            [
                "predict",
                "--chain",
                str(workspace / "nowhere"),
                "--points",
                str(workspace / "points.csv"),
            ],
        )
        assert result.exit_code == 1
        assert error_line(result.output)["error"] == "ChainStoreError"


class TestAgentsCommand:
    """Tests for `causalsynth agents`."""

    def test_writes_plugin_csv(self, runner, workspace):
        out = workspace / "fitted.csv"
        result = runner.invoke(
            cli,
            [
                "agents",
                "--data",
                str(workspace / "data.csv"),
                "--fit-agents",
                "lm",
                "--config",
                str(workspace / "config.yaml"),
                "--out",
                str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["tau_hat_1", "se_1"]
        assert (frame["se_1"] > 0).all()


class TestSimulateCommand:
    """Tests for `causalsynth simulate`."""

    def scenario(self, ws: Path, extra: str = "", roster: str = "lm") -> Path:
        path = ws / "scenario.yaml"
        path.write_text(
            "name: tiny\nscenario: 1\nn: 40\nreplications: 1\nseed: 3\n"
            f"roster: [{roster}]\ninclude_bcs: false\n" + extra
        )
        return path

    def test_writes_report(self, runner, workspace):
        path = self.scenario(workspace)
        out = workspace / "sim"
        result = runner.invoke(
            cli, ["simulate", "--scenario", str(path), "--out", str(out), "--workers", "1"]
        )
        assert result.exit_code == 0, result.output
        assert "tiny: 1/1" in result.output
        assert (out / "report.csv").exists()
        assert json.loads((out / "report.json").read_text())["completed"] == 1

    def test_failed_replicate_exits_one(self, runner, workspace):
        path = self.scenario(workspace, "agents:\n  knn:\n    k: 1000\n", roster="knn")
        out = workspace / "sim"
        result = runner.invoke(cli, ["simulate", "--scenario", str(path), "--out", str(out)])
        assert result.exit_code == 1
        assert error_line(result.output)["details"]["failed"] == [0]
        assert (out / "report.json").exists()

    def test_invalid_scenario(self, runner, workspace):
        path = self.scenario(workspace, "p: 3\n")
        result = runner.invoke(cli, ["simulate", "--scenario", str(path)])
        assert result.exit_code == 2
        assert error_line(result.output)["details"]["field"] == "p"


class TestValidateCommand:
    """Tests for `causalsynth validate`."""

    def fake_suite(self, passed: bool):
        def run(*, seed: int, geweke_draws: int) -> list[OracleResult]:
            return [
                OracleResult(name="dense_equivalence", passed=True, statistic=0.0, threshold=1e-6),
                OracleResult(name="geweke", passed=passed, statistic=5.0, threshold=4.0),
            ]

        return run

    def test_all_pass(self, runner, monkeypatch):
        monkeypatch.setattr("causalsynth.oracles.run_oracle_suite", self.fake_suite(True))
        result = runner.invoke(cli, ["validate"])
        assert result.exit_code == 0, result.output
        assert "geweke" in result.output

    def test_failure_reported(self, runner, monkeypatch):
        monkeypatch.setattr("causalsynth.oracles.run_oracle_suite", self.fake_suite(False))
        result = runner.invoke(cli, ["validate"])
        assert result.exit_code == 1
        payload = error_line(result.output)
        assert payload["error"] == "ValidationFailed"
        assert list(payload["details"]) == ["geweke"]

    def test_too_few_geweke_draws(self, runner):
        result = runner.invoke(cli, ["validate", "--geweke-draws", "10"])
        assert result.exit_code == 1
        assert error_line(result.output)["details"]["minimum"] == 100


class TestVersion:
    """Tests for global options."""

    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "causalsynth" in result.output
