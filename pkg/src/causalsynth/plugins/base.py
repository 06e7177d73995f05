"""Base interface for treatment-effect agents.

An agent is any estimator of the heterogeneous treatment effect that reports
a pointwise estimate and standard error. The synthesis model treats its
output as the approximate posterior N(tau_hat, se^2).

Design Principles:
- Agents are configured by a Pydantic model (``config_schema``)
- ``fit`` works on training data and returns in-sample estimates
- ``estimate`` evaluates a fitted agent at new encoded covariate rows
- Randomness comes only from the integer ``seed`` passed to ``fit``
- Failures raise AgentError naming the agent

Example Agent:
    class ConstantAgent(Agent):
        name = "constant"
        config_schema = ConstantConfig

        def fit(self, data, *, seed, truth=None):
            self._effect = data.y[data.treated].mean() - data.y[~data.treated].mean()
            return self.estimate(data.x)

        def estimate(self, x, *, truth=None):
            return AgentFit(
                name=self.name,
                tau_hat=np.full(x.shape[0], self._effect),
                se=np.full(x.shape[0], 1.0),
            )
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any, ClassVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from causalsynth.models import AgentPosterior, frozen_array

if TYPE_CHECKING:
    from causalsynth.models import ObservedData


# =============================================================================
# DATA MODELS
# =============================================================================


class AgentFit(BaseModel):
    """Pointwise estimates of one agent on one set of points.

    Attributes:
        name: The agent that produced the estimates.
        tau_hat: Effect estimates, one per point.
        se: Standard errors, one per point.
        metadata: Agent-specific fit details (chosen k, cycles, ...).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str = Field(..., description="Agent name")
    tau_hat: np.ndarray = Field(..., description="Pointwise effect estimates")
    se: np.ndarray = Field(..., description="Pointwise standard errors")
    metadata: dict[str, Any] = Field(default_factory=dict, description="Fit details")

    @field_validator("tau_hat", "se", mode="before")
    @classmethod
    def _vector(cls, value: Any) -> np.ndarray:
        return frozen_array(value, ndim=1)

    def posterior(self, j: int) -> AgentPosterior:
        """View these estimates as the j-th agent posterior."""
        return AgentPosterior(j=j, name=self.name, tau_hat=self.tau_hat, se=self.se)


# =============================================================================
# AGENT INTERFACE
# =============================================================================


class Agent(ABC):
    """Abstract base class for treatment-effect agents.

    Class Attributes:
        name: Unique identifier for this agent (e.g., "lm", "knn").
        config_schema: Pydantic model class for validating agent configuration.
        requires_truth: Whether ``fit`` and ``estimate`` need the true effect
            (only simulation agents).
    """

    name: ClassVar[str]
    config_schema: ClassVar[type[BaseModel]]
    requires_truth: ClassVar[bool] = False

    def __init__(self, config: BaseModel) -> None:
        self._config = config
        self._fitted = False

    @property
    def fitted(self) -> bool:
        return self._fitted

    @abstractmethod
    def fit(
        self,
        data: ObservedData,
        *,
        seed: int,
        truth: np.ndarray | None = None,
    ) -> AgentFit:
        """Fit on training data and return in-sample estimates.

        Args:
            data: Training data with encoded covariates.
            seed: Seed for any resampling the agent performs.
            truth: True effects at the training points (simulation agents only).

        Returns:
            AgentFit aligned with the rows of ``data``.

        Raises:
            AgentError: If the agent cannot be fitted on this data.
        """
        ...

    @abstractmethod
    def estimate(self, x: np.ndarray, *, truth: np.ndarray | None = None) -> AgentFit:
        """Evaluate the fitted agent at new encoded covariate rows.

        Raises:
            AgentError: If the agent is not fitted or cannot extrapolate.
        """
        ...
