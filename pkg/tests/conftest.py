"""Shared fixtures for the causalsynth test suite."""

from __future__ import annotations

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from causalsynth.models import AgentPosterior, ObservedData, Priors, SamplerSettings
from causalsynth.sampler import ChainResult, sample_chain

settings.register_profile(
    "causalsynth",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("causalsynth")

RUN_SLOW_ENV = "CAUSALSYNTH_RUN_SLOW"


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if os.environ.get(RUN_SLOW_ENV) == "1":
        return
    skip_slow = pytest.mark.skip(reason=f"slow; set {RUN_SLOW_ENV}=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def linear_dataset(
    n: int = 60, p: int = 2, *, seed: int = 0, noise: float = 0.5
) -> tuple[ObservedData, np.ndarray]:
    """Alternating treatments, tau = 1 + x1, mu = 2 + x2 (when p > 1)."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    t = (np.arange(n) % 2).astype(np.float64)
    tau = 1.0 + x[:, 0]
    mu = 2.0 + (x[:, 1] if p > 1 else 0.0)
    y = mu + t * tau + noise * rng.standard_normal(n)
    data = ObservedData(
        y=y,
        t=t,
        x=x,
        pi=np.full(n, 0.5),
        covariate_names=[f"x{k + 1}" for k in range(p)],
    )
    return data, tau


def noisy_agent(tau: np.ndarray, *, j: int = 1, sd: float = 0.3, seed: int = 1) -> AgentPosterior:
    rng = np.random.default_rng(seed)
    return AgentPosterior(
        j=j,
        name=f"agent{j}",
        tau_hat=tau + sd * rng.standard_normal(tau.shape[0]),
        se=np.full(tau.shape[0], sd),
    )


@pytest.fixture
def small_data() -> tuple[ObservedData, np.ndarray]:
    """Sixty rows with a linear effect in x1."""
    return linear_dataset()


@pytest.fixture
def quick_settings() -> SamplerSettings:
    """A short chain for structural tests."""
    return SamplerSettings(m=5, n_iter=60, n_burn=20, seed=11)


@pytest.fixture(scope="session")
def quick_chain() -> ChainResult:
    """One short chain with two agents, shared by prediction and storage tests."""
    data, tau = linear_dataset(n=40, seed=3)
    agents = [noisy_agent(tau, j=1, seed=4), noisy_agent(tau, j=2, sd=0.6, seed=5)]
    settings_ = SamplerSettings(m=5, n_iter=50, n_burn=10, seed=5)
    return sample_chain(data, agents, Priors(), settings_)
