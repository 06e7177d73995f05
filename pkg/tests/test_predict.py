"""Tests for out-of-sample prediction."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from causalsynth.data import encode_covariates
from causalsynth.exceptions import PredictionError
from causalsynth.predict import (
    AgentValues,
    predict_beta_at,
    predict_points,
    predict_tau_at,
    prediction_coefficients,
    prediction_neighbors,
    read_prediction_csv,
)


class TestPredictionNeighbors:
    """Tests for neighbor search around a new point."""

    def test_nearest_first(self):
        points = np.array([[0.0], [3.0], [1.0], [2.0]])
        idx, dist, pair = prediction_neighbors(np.array([0.9]), points, 2)
        np.testing.assert_array_equal(idx, [2, 0])
        np.testing.assert_allclose(dist, [0.1, 0.9])
        np.testing.assert_allclose(pair, [[0.0, 1.0], [1.0, 0.0]])

    def test_ties_by_index(self):
        idx, _, _ = prediction_neighbors(np.zeros(1), np.zeros((4, 1)), 2)
        np.testing.assert_array_equal(idx, [0, 1])

    def test_fewer_points_than_m(self):
        idx, _, _ = prediction_neighbors(np.zeros(2), np.ones((3, 2)), 10)
        assert idx.shape == (3,)


class TestPredictionCoefficients:
    """Tests for conditioning a new point on training points."""

    def test_at_a_training_point(self):
        """Conditioning on a coincident point copies its value."""
        points = np.array([[0.0], [0.5], [2.0]])
        _, dist, pair = prediction_neighbors(np.array([0.5]), points, 3)
        b, f = prediction_coefficients(dist, pair, np.array([0.7]))
        np.testing.assert_allclose(b[0], [1.0, 0.0, 0.0], atol=1e-6)
        assert f[0] == pytest.approx(0.0, abs=1e-6)

    def test_far_point_reverts_to_prior(self):
        points = np.array([[0.0], [0.5]])
        _, dist, pair = prediction_neighbors(np.array([1000.0]), points, 2)
        b, f = prediction_coefficients(dist, pair, np.array([0.5, 1.0]))
        np.testing.assert_allclose(b, 0.0, atol=1e-12)
        np.testing.assert_allclose(f, 1.0)


class TestPredictBetaAt:
    """Tests for coefficient draws at a new point."""

    def test_training_point_reproduces_stored_draws(self, quick_chain):
        graph = quick_chain.graphs.beta
        rng = np.random.default_rng(0)
        beta = predict_beta_at(
            graph.points[5], quick_chain.draws, graph, quick_chain.priors.bar_beta, rng
        )
        np.testing.assert_allclose(beta, quick_chain.draws.beta[:, 5, :], atol=1e-3)

    def test_far_point_draws_from_prior(self, quick_chain):
        graph = quick_chain.graphs.beta
        draws = quick_chain.draws
        far = np.full(graph.points.shape[1], 1e4)
        bar = np.asarray(quick_chain.priors.bar_beta)
        beta = predict_beta_at(far, draws, graph, bar, np.random.default_rng(1))
        z = (beta - bar) / np.sqrt(draws.tau2_beta)
        assert beta.shape == (draws.n_draws, 3)
        assert abs(z.mean()) < 0.4
        assert 0.6 < z.std() < 1.4

    def test_wrong_dimension(self, quick_chain):
        graph = quick_chain.graphs.beta
        with pytest.raises(PredictionError) as exc_info:
            predict_beta_at(
                np.zeros(7),
                quick_chain.draws,
                graph,
                quick_chain.priors.bar_beta,
                np.random.default_rng(0),
            )
        assert exc_info.value.details["got"] == 7


class TestAgentValues:
    """Tests for prediction-point agent inputs."""

    def test_missing_value_names_agent(self):
        values = AgentValues(
            tau_hat=np.array([1.0, np.nan]), se=np.array([0.1, 0.1]), names=("lm", "knn")
        )
        with pytest.raises(PredictionError) as exc_info:
            values.check(2)
        assert exc_info.value.details["agents"] == ["knn"]

    def test_nonpositive_se(self):
        values = AgentValues(tau_hat=np.array([1.0]), se=np.array([0.0]))
        with pytest.raises(PredictionError, match="positive") as exc_info:
            values.check(1)
        assert exc_info.value.details["agents"] == ["agent1"]

    def test_wrong_count(self):
        values = AgentValues(tau_hat=np.array([1.0]), se=np.array([0.1]))
        with pytest.raises(PredictionError):
            values.check(2)


class TestPredictTauAt:
    """Tests for effect summaries at one point."""

    def test_summary_matches_draws(self, quick_chain):
        graph = quick_chain.graphs.beta
        values = AgentValues(tau_hat=np.array([1.0, 1.2]), se=np.array([0.3, 0.6]))
        summary = predict_tau_at(
            graph.points[0],
            values,
            quick_chain.draws,
            graph,
            quick_chain.priors.bar_beta,
            np.random.default_rng(2),
        )
        assert summary.draws.shape == (quick_chain.draws.n_draws,)
        assert summary.mean == pytest.approx(summary.draws.mean())
        assert summary.lo95 <= summary.mean <= summary.hi95
        assert summary.width == pytest.approx(summary.hi95 - summary.lo95)


class TestPredictPoints:
    """Tests for batch prediction."""

    def inputs(self, chain, rows: int = 3):
        x = chain.data.x[:rows]
        return x, np.ones((rows, 2)), np.full((rows, 2), 0.5)

    def test_same_seed_same_summaries(self, quick_chain):
        x, tau_hat, se = self.inputs(quick_chain)
        first = predict_points(quick_chain, x, tau_hat, se, seed=1)
        second = predict_points(quick_chain, x, tau_hat, se, seed=1)
        pd.testing.assert_frame_equal(first, second)
        assert list(first.columns) == ["mean", "sd", "lo95", "hi95", "width"]
        assert len(first) == 3

    def test_error_names_row(self, quick_chain):
        x, tau_hat, se = self.inputs(quick_chain)
        se[1, 0] = 0.0
        with pytest.raises(PredictionError) as exc_info:
            predict_points(quick_chain, x, tau_hat, se, seed=1, agent_names=["lm", "knn"])
        assert exc_info.value.details["row"] == 1
        assert exc_info.value.details["agents"] == ["lm"]


class TestReadPredictionCsv:
    """Tests for the prediction input file."""

    @pytest.fixture
    def encoding(self):
        _, report = encode_covariates(
            pd.DataFrame({"age": [20.0, 30.0, 40.0], "group": ["a", "b", "a"]})
        )
        return report

    def test_reads_covariates_and_agents(self, tmp_path: Path, encoding):
        path = tmp_path / "points.csv"
        pd.DataFrame(
            {
                "age": [25.0, 35.0],
                "group": ["b", "a"],
                "tau_hat_1": [1.0, 2.0],
                "se_1": [0.1, 0.2],
            }
        ).to_csv(path, index=False)
        x, tau_hat, se = read_prediction_csv(path, encoding, ["lm"])
        assert x.shape == (2, 2)
        np.testing.assert_array_equal(x[:, 1], [1.0, 0.0])
        np.testing.assert_allclose(tau_hat[:, 0], [1.0, 2.0])
        np.testing.assert_allclose(se[:, 0], [0.1, 0.2])

    def test_missing_agent_columns_named(self, tmp_path: Path, encoding):
        path = tmp_path / "points.csv"
        pd.DataFrame(
            {"age": [25.0], "group": ["a"], "tau_hat_1": [1.0], "se_1": [0.1]}
        ).to_csv(path, index=False)
        with pytest.raises(PredictionError) as exc_info:
            read_prediction_csv(path, encoding, ["lm", "knn"])
        assert exc_info.value.details["agents"] == ["knn"]
