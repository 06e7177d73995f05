"""Agent backed by a plug-in CSV file.

Wraps one ``tau_hat_j, se_j`` pair of a file in the plug-in agent format,
so estimates from any outside tool can join a roster. The file covers the
training rows only; prediction points carry their own agent columns.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, ClassVar

import numpy as np

from causalsynth.constants import AGENT_EXTERNAL
from causalsynth.data import read_agent_csv
from causalsynth.exceptions import AgentError, DataValidationError
from causalsynth.models import ExternalAgentConfig
from causalsynth.plugins.base import Agent, AgentFit

if TYPE_CHECKING:
    from causalsynth.models import ObservedData


class ExternalAgent(Agent):
    """Reads precomputed estimates instead of fitting."""

    name: ClassVar[str] = AGENT_EXTERNAL
    config_schema: ClassVar[type[ExternalAgentConfig]] = ExternalAgentConfig

    def __init__(self, config: ExternalAgentConfig) -> None:
        super().__init__(config)
        self._path = Path(config.path)
        self._column = config.column

    def fit(
        self,
        data: ObservedData,
        *,
        seed: int,
        truth: np.ndarray | None = None,
    ) -> AgentFit:
        """Load column pair ``column`` and check it covers every row.

        Raises:
            AgentError: If the file is malformed, lacks the pair or has a
                different row count.
        """
        try:
            posteriors = read_agent_csv(self._path)
        except (OSError, DataValidationError) as e:
            raise AgentError(
                "Cannot read external estimates", self.name, {"path": str(self._path)}
            ) from e

        wanted = f"external{self._column}"
        match = next((p for p in posteriors if p.name == wanted), None)
        if match is None:
            raise AgentError(
                f"No tau_hat_{self._column} column in the external file",
                self.name,
                {"path": str(self._path), "available": [p.name for p in posteriors]},
            )
        if match.tau_hat.shape[0] != data.n:
            raise AgentError(
                "External file rows do not match the data",
                self.name,
                {"rows": int(match.tau_hat.shape[0]), "n": data.n},
            )
        self._fitted = True
        return AgentFit(
            name=wanted,
            tau_hat=match.tau_hat,
            se=match.se,
            metadata={"path": str(self._path)},
        )

    def estimate(self, x: np.ndarray, *, truth: np.ndarray | None = None) -> AgentFit:
        raise AgentError(
            "External estimates exist only for the training rows; "
            "supply tau_hat/se columns with the prediction points",
            self.name,
        )
