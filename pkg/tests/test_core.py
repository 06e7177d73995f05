"""Tests for the CausalSynthesis orchestrator and its output files."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from causalsynth.constants import (
    AGENTS_FILE,
    CHAIN_DIR_NAME,
    COEFFICIENTS_FILE,
    DIAGNOSTICS_FILE,
    TAU_SUMMARY_FILE,
)
from causalsynth.core import CausalSynthesis, coefficient_summary, write_synthesis_outputs
from causalsynth.data import encode_covariates
from causalsynth.exceptions import AgentError, ConfigError
from causalsynth.models import (
    AdditiveAgentConfig,
    AgentsConfig,
    CausalSynthConfig,
    DataConfig,
    KnnAgentConfig,
    ObservedData,
    SamplerSettings,
)
from causalsynth.storage import ChainStore
from tests.conftest import noisy_agent

FAST_SAMPLER = SamplerSettings(m=5, n_iter=40, n_burn=10, seed=3)


@pytest.fixture
def config() -> CausalSynthConfig:
    return CausalSynthConfig(
        sampler=FAST_SAMPLER,
        agents=AgentsConfig(
            am=AdditiveAgentConfig(bootstrap_reps=5),
            knn=KnnAgentConfig(subsample_reps=10),
        ),
    )


@pytest.fixture
def study():
    """Encoded study data with a categorical column, plus its true effect."""
    rng = np.random.default_rng(0)
    n = 50
    table = pd.DataFrame(
        {
            "age": rng.normal(40.0, 10.0, n),
            "dose": rng.normal(size=n),
            "site": rng.choice(["a", "b"], n),
        }
    )
    x, encoding = encode_covariates(table)
    t = np.arange(n) % 2
    tau = 1.0 + x[:, 1]
    y = x[:, 0] + t * tau + 0.3 * rng.standard_normal(n)
    data = ObservedData(y=y, t=t, x=x, pi=np.full(n, 0.5), covariate_names=encoding.encoded_names)
    return data, encoding, tau


class TestConfiguration:
    """Tests for roster and settings resolution."""

    def test_default_roster(self, config):
        assert CausalSynthesis(config).default_roster() == ["lm", "am", "knn"]

    def test_disabled_agent_leaves_roster(self):
        config = CausalSynthConfig(agents=AgentsConfig(am=AdditiveAgentConfig(enabled=False)))
        assert CausalSynthesis(config).default_roster() == ["lm", "knn"]

    def test_seed_override(self, config):
        assert CausalSynthesis(config).settings_for(seed=99).seed == 99
        assert CausalSynthesis(config).settings_for().seed == 3

    def test_beta_columns_mapped_through_encoding(self, study):
        _, encoding, _ = study
        config = CausalSynthConfig(data=DataConfig(beta_columns=["dose", "site"]))
        settings = CausalSynthesis(config).settings_for(encoding)
        assert settings.beta_columns == [1, 2]

    def test_beta_columns_need_encoding(self):
        config = CausalSynthConfig(data=DataConfig(beta_columns=["dose"]))
        with pytest.raises(ConfigError):
            CausalSynthesis(config).settings_for()


class TestAgents:
    """Tests for agent creation and fitting."""

    def test_unknown_agent(self, config):
        with pytest.raises(ConfigError) as exc_info:
            CausalSynthesis(config).create_agent("forest")
        assert "lm" in exc_info.value.details["available"]
        assert exc_info.value.exit_code == 2

    def test_agent_without_config_section(self, config):
        """The external agent needs a path, which the project config cannot supply."""
        with pytest.raises(ConfigError, match="Cannot create agent 'external'"):
            CausalSynthesis(config).create_agent("external")

    def test_configured_settings_reach_agent(self, study):
        data, _, _ = study
        config = CausalSynthConfig(agents=AgentsConfig(knn=KnnAgentConfig(k=1000)))
        with pytest.raises(AgentError) as exc_info:
            CausalSynthesis(config).fit_agents(data, ["knn"], seed=1)
        assert exc_info.value.details["k"] == 1000

    def test_positions_and_seeds(self, config, study):
        data, _, _ = study
        synth = CausalSynthesis(config)
        first, _ = synth.fit_agents(data, ["lm", "knn"], seed=4, first_index=2)
        second, _ = synth.fit_agents(data, ["lm", "knn"], seed=4, first_index=2)
        assert [p.j for p in first] == [2, 3]
        assert [p.name for p in first] == ["lm", "knn"]
        np.testing.assert_array_equal(first[1].se, second[1].se)


class TestSynthesize:
    """Tests for full synthesis runs."""

    def test_external_agents_come_first(self, config, study):
        data, encoding, tau = study
        external = noisy_agent(tau, j=7)
        result = CausalSynthesis(config).synthesize(
            data, roster=["lm"], external=[external], encoding=encoding
        )
        assert [a.j for a in result.agents] == [1, 2]
        assert result.agent_names == ["agent7", "lm"]
        assert result.chain.draws.n_agents == 2
        assert result.tau_summary().shape == (50, 5)

    def test_requires_an_agent(self, config, study):
        data, encoding, _ = study
        with pytest.raises(AgentError, match="At least one agent"):
            CausalSynthesis(config).synthesize(data, encoding=encoding)

    def test_coefficient_summary_columns(self, quick_chain):
        frame = coefficient_summary(quick_chain.draws)
        assert list(frame.columns[:3]) == ["beta0_mean", "beta0_lo95", "beta0_hi95"]
        assert frame.shape == (40, 9)


class TestWriteOutputs:
    """Tests for write_synthesis_outputs."""

    def run(self, config, study, out: Path) -> list[Path]:
        data, encoding, _ = study
        result = CausalSynthesis(config).synthesize(data, roster=["lm", "knn"], encoding=encoding)
        return write_synthesis_outputs(result, out, encoding=encoding)

    def test_writes_every_artifact(self, config, study, tmp_path):
        written = self.run(config, study, tmp_path / "out")
        names = [p.name for p in written]
        assert names == [
            TAU_SUMMARY_FILE,
            COEFFICIENTS_FILE,
            DIAGNOSTICS_FILE,
            AGENTS_FILE,
            CHAIN_DIR_NAME,
        ]
        tau = pd.read_csv(tmp_path / "out" / TAU_SUMMARY_FILE)
        assert list(tau.columns) == ["mean", "sd", "lo95", "hi95", "width"]
        assert len(tau) == 50
        diagnostics = json.loads((tmp_path / "out" / DIAGNOSTICS_FILE).read_text())
        assert diagnostics["n_retained"] == 30
        assert ChainStore(tmp_path / "out" / CHAIN_DIR_NAME).load().agent_names == ["lm", "knn"]

    def test_same_seed_same_files(self, config, study, tmp_path):
        self.run(config, study, tmp_path / "a")
        self.run(config, study, tmp_path / "b")
        for name in (TAU_SUMMARY_FILE, COEFFICIENTS_FILE, AGENTS_FILE):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
