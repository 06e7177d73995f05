"""Tests for the simulation benchmark."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from causalsynth.exceptions import DataValidationError
from causalsynth.models import (
    AgentsConfig,
    EvalRow,
    KnnAgentConfig,
    ReplicateResult,
    SamplerSettings,
    ScenarioConfig,
)
from causalsynth.simbench import (
    aggregate,
    draw_covariates,
    effect,
    evaluate,
    generate_scenario,
    prognostic,
    run_replicate,
    run_replications,
    write_report,
)

FAST_SAMPLER = SamplerSettings(m=5, n_iter=30, n_burn=10)


def small_scenario(**overrides) -> ScenarioConfig:
    fields = {
        "name": "tiny",
        "scenario": 1,
        "n": 40,
        "p": 5,
        "replications": 2,
        "seed": 17,
        "roster": ["lm"],
        "include_bcs": False,
        "sampler": FAST_SAMPLER,
    }
    fields.update(overrides)
    return ScenarioConfig(**fields)


class TestSurfaces:
    """Tests for the data-generating formulas."""

    def test_prognostic_forms(self):
        x3, x5 = np.array([-1.0, 0.5]), np.array([2.0, 1.0])
        np.testing.assert_allclose(prognostic(x3, x5, "A"), [-7.0, -7.0])
        np.testing.assert_allclose(prognostic(x3, x5, "B"), 2.0 + 2.0 * np.sin(3.0 * x3))

    def test_effect_forms(self):
        x2, x3, x5 = np.array([0.5]), np.array([1.0]), np.array([3.0])
        assert effect(x2, x3, x5, "A")[0] == pytest.approx(4.0)
        assert effect(x2, x3, x5, "B")[0] == pytest.approx(4.5)

    def test_covariate_types(self):
        table = draw_covariates(np.random.default_rng(0), 500, 7)
        assert list(table.columns) == [f"x{k}" for k in range(1, 8)]
        assert set(table["x4"].unique()) == {0, 1}
        assert set(table["x5"].unique()) == {1, 2, 3}


class TestScenarioConfig:
    """Tests for scenario numbering and validation."""

    @pytest.mark.parametrize(
        ("number", "forms"), [(1, ("A", "A")), (2, ("B", "A")), (3, ("A", "B")), (4, ("B", "B"))]
    )
    def test_scenario_numbers(self, number, forms):
        cfg = ScenarioConfig(scenario=number)
        assert (cfg.mu_form, cfg.tau_form) == forms

    def test_test_evaluation_needs_test_set(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(evaluation="test")

    @pytest.mark.parametrize("field", [{"p": 4}, {"replications": 0}, {"scenario": 5}])
    def test_out_of_range(self, field):
        with pytest.raises(ValidationError):
            ScenarioConfig(**field)


class TestGenerateScenario:
    """Tests for replicate generation."""

    def test_encoding(self):
        sample = generate_scenario(small_scenario(), 0)
        assert sample.data.covariate_names == ["x1", "x2", "x3", "x4", "x5_2", "x5_3"]
        np.testing.assert_array_equal(sample.data.pi, 0.5)
        assert sample.data.problems() == []

    def test_depends_only_on_seed_and_replicate(self):
        cfg = small_scenario()
        first, again, other = (generate_scenario(cfg, r) for r in (0, 0, 1))
        np.testing.assert_array_equal(first.data.y, again.data.y)
        assert not np.array_equal(first.data.y, other.data.y)

    def test_truth_matches_surfaces(self):
        cfg = small_scenario(scenario=4)
        sample = generate_scenario(cfg, 0)
        table = sample.covariates
        expected = effect(table["x2"], table["x3"], table["x5"].astype(float), "B")
        np.testing.assert_allclose(sample.tau, expected)

    def test_estimated_propensity_mode(self):
        sample = generate_scenario(small_scenario(known_propensity=False), 0)
        assert sample.data.pi is None

    def test_test_set(self):
        sample = generate_scenario(small_scenario(n_test=15, evaluation="test"), 0)
        assert sample.test_x.shape == (15, 6)
        assert sample.evaluation_truth("test").shape == (15,)
        assert sample.evaluation_truth("in_sample").shape == (40,)

    def test_missing_test_set(self):
        sample = generate_scenario(small_scenario(), 0)
        with pytest.raises(DataValidationError):
            sample.evaluation_truth("test")


class TestMetrics:
    """Tests for evaluate and aggregate."""

    def test_evaluate(self):
        row = evaluate([1.0, 2.0], [1.0, 3.0], ([0.0, 0.0], [2.0, 2.0]), method="lm")
        assert row.mse == pytest.approx(0.5)
        assert row.cp == pytest.approx(50.0)
        assert row.al == pytest.approx(2.0)
        assert row.n == 2

    def test_evaluate_without_intervals(self):
        row = evaluate([0.0], [1.0])
        assert row.cp is None
        assert row.al is None

    def test_evaluate_rejects_misaligned(self):
        with pytest.raises(DataValidationError):
            evaluate([1.0, 2.0], [1.0])
        with pytest.raises(DataValidationError):
            evaluate([1.0], [1.0], ([0.0, 0.0], [2.0]))

    def test_aggregate_pools_rmse(self):
        cfg = small_scenario(replications=3)
        results = [
            ReplicateResult(replicate=0, rows=[EvalRow(method="lm", mse=1.0, n=10)]),
            ReplicateResult(replicate=1, rows=[EvalRow(method="lm", mse=3.0, n=30)]),
            ReplicateResult(replicate=2, error="AgentError: boom"),
        ]
        report = aggregate(cfg, results, 1.5)
        lm = report.method("lm")
        assert lm.mse == pytest.approx(2.0)
        assert lm.rmse == pytest.approx(math.sqrt(2.5))
        assert lm.replications == 2
        assert report.completed == 2
        assert not report.complete
        assert [f.replicate for f in report.failures] == [2]


class TestReplications:
    """Tests for running replicates."""

    def test_agents_only(self):
        report = run_replications(small_scenario(), workers=1)
        assert report.complete
        assert [m.method for m in report.methods] == ["lm"]
        assert report.method("lm").replications == 2
        assert report.method("lm").cp is not None

    def test_with_synthesis(self):
        cfg = small_scenario(roster=["oracle"], include_bcs=True, replications=1)
        report = run_replications(cfg, workers=1)
        assert report.complete
        assert {m.method for m in report.methods} == {"bcs", "oracle"}
        assert report.method("oracle").cp is not None

    def test_test_set_evaluation(self):
        cfg = small_scenario(
            roster=["lm", "oracle"],
            include_bcs=True,
            replications=1,
            n_test=12,
            evaluation="test",
        )
        result = run_replicate(cfg, 0)
        assert result.error is None
        assert {row.method for row in result.rows} == {"bcs", "lm", "oracle"}
        assert all(row.n == 12 for row in result.rows)

    def test_failure_is_recorded(self):
        cfg = small_scenario(roster=["knn"], agents=AgentsConfig(knn=KnnAgentConfig(k=1000)))
        report = run_replications(cfg, workers=1)
        assert report.completed == 0
        assert len(report.failures) == 2
        assert report.failures[0].error.startswith("AgentError")

    def test_worker_count_does_not_change_results(self):
        cfg = small_scenario()
        serial = run_replications(cfg, workers=1).model_dump(exclude={"wall_clock_seconds"})
        parallel = run_replications(cfg, workers=2).model_dump(exclude={"wall_clock_seconds"})
        assert serial == parallel


class TestWriteReport:
    """Tests for report files."""

    def test_files(self, tmp_path: Path):
        report = run_replications(small_scenario(), workers=1)
        paths = write_report(report, tmp_path)
        assert [p.name for p in paths] == ["report.csv", "report.json", "replicates.csv"]

        summary = pd.read_csv(tmp_path / "report.csv")
        assert list(summary.columns) == ["method", "mse", "rmse", "cp", "al", "replications"]
        per_rep = pd.read_csv(tmp_path / "replicates.csv")
        assert sorted(per_rep["replicate"]) == [0, 1]
        payload = json.loads((tmp_path / "report.json").read_text())
        assert payload["name"] == "tiny"
        assert payload["completed"] == 2
