"""Oracle agent for simulation studies.

Reports the true effect plus Gaussian noise of sd ``noise_sd`` and claims
that sd as its standard error. It needs the truth, so only the simulation
runner can use it.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, ClassVar

import numpy as np

from causalsynth.constants import AGENT_ORACLE
from causalsynth.exceptions import AgentError
from causalsynth.models import OracleAgentConfig
from causalsynth.plugins.base import Agent, AgentFit
from causalsynth.utils import spawn_rng

if TYPE_CHECKING:
    from causalsynth.models import ObservedData


class OracleAgent(Agent):
    """Truth-plus-noise agent."""

    name: ClassVar[str] = AGENT_ORACLE
    config_schema: ClassVar[type[OracleAgentConfig]] = OracleAgentConfig
    requires_truth: ClassVar[bool] = True

    def __init__(self, config: OracleAgentConfig) -> None:
        super().__init__(config)
        self._noise_sd = config.noise_sd
        self._seed = 0

    def _perturb(self, truth: np.ndarray | None, stream: int) -> AgentFit:
        if truth is None:
            raise AgentError("The oracle agent needs the true effects", self.name)
        rng = spawn_rng(self._seed, stream)
        tau_hat = np.asarray(truth) + self._noise_sd * rng.standard_normal(len(truth))
        return AgentFit(name=self.name, tau_hat=tau_hat, se=np.full(len(truth), self._noise_sd))

    def fit(
        self,
        data: ObservedData,
        *,
        seed: int,
        truth: np.ndarray | None = None,
    ) -> AgentFit:
        self._seed = seed
        self._fitted = True
        return self._perturb(truth, 0)

    def estimate(self, x: np.ndarray, *, truth: np.ndarray | None = None) -> AgentFit:
        if not self._fitted:
            raise AgentError("Agent is not fitted", self.name)
        return self._perturb(truth, 1)
