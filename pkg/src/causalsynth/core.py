"""Core orchestration for causalsynth.

This module contains the CausalSynthesis class which coordinates fitting the
agent roster, resolving propensity scores and running the synthesis chain,
and the writers for the artifacts a synthesis run produces.

Uses the agent registry, so third-party agents installed through entry points
can join a roster by name.

Example:
    config = load_config()
    synth = CausalSynthesis(config)
    result = synth.synthesize(data, roster=["lm", "am", "knn"], encoding=report)
    write_synthesis_outputs(result, Path("out"), encoding=report)
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from causalsynth.agents.propensity import resolve_propensity
from causalsynth.constants import (
    AGENTS_FILE,
    CHAIN_DIR_NAME,
    COEFFICIENTS_FILE,
    CSV_FLOAT_FORMAT,
    DIAGNOSTICS_FILE,
    TAU_SUMMARY_FILE,
)
from causalsynth.data import encoded_column_indices, require_valid, write_agent_csv
from causalsynth.exceptions import AgentError, ConfigError
from causalsynth.logging import get_logger
from causalsynth.models import AgentPosterior, CausalSynthConfig, PosteriorDraws, SamplerSettings
from causalsynth.plugins.registry import AgentRegistry
from causalsynth.sampler import ChainResult, sample_chain
from causalsynth.storage import ChainStore
from causalsynth.utils import child_seed, spawn_rng, summarize_draws

if TYPE_CHECKING:
    from causalsynth.models import EncodingReport, ObservedData
    from causalsynth.plugins.base import Agent, AgentFit

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    """Agents, chain and settings of one synthesis run."""

    chain: ChainResult
    agents: list[AgentPosterior]
    settings: SamplerSettings
    fitted: dict[str, Agent] = field(default_factory=dict)

    @property
    def agent_names(self) -> list[str]:
        return [agent.label for agent in self.agents]

    def tau_summary(self) -> pd.DataFrame:
        """Per-row mean, sd, lo95, hi95 and width of tau."""
        return summarize_draws(self.chain.draws.tau)

    def coefficient_summary(self) -> pd.DataFrame:
        return coefficient_summary(self.chain.draws)


def coefficient_summary(draws: PosteriorDraws) -> pd.DataFrame:
    """Posterior mean and 95% bounds of beta_j(x_i) for every j."""
    columns: dict[str, np.ndarray] = {}
    for j in range(draws.beta.shape[2]):
        summary = summarize_draws(draws.beta[:, :, j])
        columns[f"beta{j}_mean"] = summary["mean"].to_numpy()
        columns[f"beta{j}_lo95"] = summary["lo95"].to_numpy()
        columns[f"beta{j}_hi95"] = summary["hi95"].to_numpy()
    return pd.DataFrame(columns)


class CausalSynthesis:
    """Fits agents and runs the synthesis sampler.

    This class coordinates:
        - Creating agents through the registry with their configured settings
        - Deriving one seed per agent from the run seed
        - Attaching propensities (supplied or estimated)
        - Running the chain with the configured priors and sampler settings
    """

    def __init__(
        self,
        config: CausalSynthConfig | None = None,
        *,
        registry: AgentRegistry | None = None,
    ) -> None:
        """Initialize the orchestrator.

        Args:
            config: Project configuration; defaults apply when omitted.
            registry: Agent registry; the default registry when omitted.
        """
        self._config = config or CausalSynthConfig()
        self._registry = registry or AgentRegistry.default()

    @property
    def config(self) -> CausalSynthConfig:
        return self._config

    def default_roster(self) -> list[str]:
        """Built-in agents enabled in the configuration."""
        agents = self._config.agents
        return [
            name
            for name, section in (("lm", agents.lm), ("am", agents.am), ("knn", agents.knn))
            if section.enabled
        ]

    def settings_for(
        self, encoding: EncodingReport | None = None, *, seed: int | None = None
    ) -> SamplerSettings:
        """Sampler settings with the seed override and coefficient columns applied.

        Raises:
            ConfigError: If ``data.beta_columns`` names are set but no encoding
                report is available to map them.
        """
        settings = self._config.sampler
        update: dict[str, object] = {}
        if seed is not None:
            update["seed"] = seed
        names = self._config.data.beta_columns
        if names is not None:
            if encoding is None:
                raise ConfigError("beta_columns requires the data encoding report")
            update["beta_columns"] = encoded_column_indices(encoding, names)
        return settings.model_copy(update=update) if update else settings

    def fit_agents(
        self,
        data: ObservedData,
        roster: Sequence[str],
        *,
        seed: int,
        truth: np.ndarray | None = None,
        first_index: int = 1,
    ) -> tuple[list[AgentPosterior], dict[str, Agent]]:
        """Fit every agent in ``roster`` on ``data``.

        Agent ``j`` (1-based position) draws its seed from stream ``(seed, j)``.

        Raises:
            ConfigError: If an agent name is unknown.
            AgentError: If an agent fails to fit.
        """
        posteriors: list[AgentPosterior] = []
        fitted: dict[str, Agent] = {}
        for position, name in enumerate(roster, start=first_index):
            agent = self.create_agent(name)
            agent_seed = child_seed(spawn_rng(seed, position))
            fit: AgentFit = agent.fit(data, seed=agent_seed, truth=truth)
            posteriors.append(fit.posterior(position))
            fitted[name] = agent
            logger.info("Fitted agent", extra={"agent": name, "j": position})
        return posteriors, fitted

    def create_agent(self, name: str) -> Agent:
        """Instantiate a registered agent with its configured settings.

        Raises:
            ConfigError: If no agent is registered under ``name``.
        """
        if name not in self._registry:
            raise ConfigError(
                f"Unknown agent '{name}'", {"available": self._registry.list_agents()}
            )
        try:
            config = self._config.agents.for_agent(name)
        except KeyError:
            config = None
        try:
            return self._registry.create(name, config)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Cannot create agent '{name}': {e}") from e

    def synthesize(
        self,
        data: ObservedData,
        *,
        roster: Sequence[str] = (),
        external: Sequence[AgentPosterior] = (),
        encoding: EncodingReport | None = None,
        seed: int | None = None,
    ) -> SynthesisResult:
        """Fit the roster, combine it with external agents and run the chain.

        External agents come first (j = 1..len(external)), followed by the
        fitted roster.

        Raises:
            AgentError: If no agent is available or an agent fails.
            DataValidationError: If data or agents violate their invariants.
            SamplerError: If a Gibbs step fails.
        """
        settings = self.settings_for(encoding, seed=seed)
        require_valid(data, [])
        data = resolve_propensity(data)

        external_agents = [
            agent.model_copy(update={"j": position})
            for position, agent in enumerate(external, start=1)
        ]
        fitted_posteriors, fitted = self.fit_agents(
            data, roster, seed=settings.seed, first_index=len(external_agents) + 1
        )
        agents = external_agents + fitted_posteriors
        if not agents:
            raise AgentError("At least one agent is required for synthesis", "synthesis")

        chain = sample_chain(data, agents, self._config.priors, settings)
        return SynthesisResult(chain=chain, agents=agents, settings=settings, fitted=fitted)


def write_synthesis_outputs(
    result: SynthesisResult, out: Path, *, encoding: EncodingReport
) -> list[Path]:
    """Write tau_summary.csv, coefficients.csv, chain_diagnostics.json,
    agents.csv and the chain directory under ``out``.

    Returns:
        Paths of the written files (the chain directory counts as one).
    """
    out.mkdir(parents=True, exist_ok=True)
    tau_path = out / TAU_SUMMARY_FILE
    result.tau_summary().to_csv(tau_path, index=False, float_format=CSV_FLOAT_FORMAT)

    coef_path = out / COEFFICIENTS_FILE
    result.coefficient_summary().to_csv(coef_path, index=False, float_format=CSV_FLOAT_FORMAT)

    diag_path = out / DIAGNOSTICS_FILE
    diag_path.write_text(
        json.dumps(result.chain.diagnostics.model_dump(mode="json"), indent=2, sort_keys=True)
        + "\n"
    )

    agents_path = out / AGENTS_FILE
    write_agent_csv(agents_path, result.agents)

    chain_dir = out / CHAIN_DIR_NAME
    ChainStore(chain_dir).save(
        result.chain, encoding=encoding, settings=result.settings, agent_names=result.agent_names
    )
    return [tau_path, coef_path, diag_path, agents_path, chain_dir]
