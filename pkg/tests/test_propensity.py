"""Tests for propensity estimation."""

import numpy as np
import pytest
from scipy.special import expit

from causalsynth.agents import estimate_propensity, resolve_propensity
from causalsynth.exceptions import PropensityError
from causalsynth.models import ObservedData, PropensityModel


def logistic_data(n: int, coefficients: list[float], seed: int = 0) -> ObservedData:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, len(coefficients) - 1))
    p = expit(coefficients[0] + x @ np.asarray(coefficients[1:]))
    t = (rng.uniform(size=n) < p).astype(np.float64)
    return ObservedData(y=np.zeros(n), t=t, x=x)


class TestEstimatePropensity:
    """Tests for the Newton-Raphson logistic fit."""

    def test_recovers_coefficients(self):
        data = logistic_data(5000, [0.3, 0.8, -0.5])
        model, pi = estimate_propensity(data)
        assert model.converged
        np.testing.assert_allclose(model.coefficients, [0.3, 0.8, -0.5], atol=0.12)
        assert pi.shape == (5000,)

    def test_scores_are_clipped(self):
        data = logistic_data(2000, [0.0, 4.0], seed=1)
        _, pi = estimate_propensity(data)
        assert pi.min() >= 0.01
        assert pi.max() <= 0.99
        assert np.any(pi == 0.99)

    def test_complete_separation(self):
        x = np.linspace(-1.0, 1.0, 40)
        data = ObservedData(y=np.zeros(40), t=(x > 0).astype(float), x=x)
        with pytest.raises(PropensityError, match="separation") as exc_info:
            estimate_propensity(data)
        assert exc_info.value.agent_name == "propensity"

    def test_single_arm(self):
        data = ObservedData(y=np.zeros(5), t=np.ones(5), x=np.arange(5.0))
        with pytest.raises(PropensityError, match="Both treatment arms"):
            estimate_propensity(data)

    def test_iteration_limit_reported(self):
        data = logistic_data(500, [0.2, 1.0], seed=2)
        model, _ = estimate_propensity(data, max_iter=1)
        assert not model.converged
        assert model.iterations == 1


class TestResolvePropensity:
    """Tests for resolve_propensity."""

    def test_supplied_scores_are_clipped(self):
        data = ObservedData(
            y=np.zeros(3), t=[0, 1, 0], x=np.zeros(3), pi=[0.001, 0.5, 0.999]
        )
        np.testing.assert_allclose(resolve_propensity(data).pi, [0.01, 0.5, 0.99])

    def test_missing_scores_are_estimated(self):
        data = logistic_data(300, [0.0, 0.5], seed=3)
        resolved = resolve_propensity(data)
        assert resolved.pi is not None
        assert data.pi is None

    def test_model_predict_clips(self):
        model = PropensityModel(
            coefficients=[0.0, 50.0], converged=True, iterations=3, gradient_norm=0.0
        )
        pi = model.predict(np.array([[-1.0], [0.0], [1.0]]), clip=(0.01, 0.99))
        np.testing.assert_allclose(pi, [0.01, 0.5, 0.99])
