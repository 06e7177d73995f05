"""Linear regression agent.

Ordinary least squares on the design [1, X, T, T*X]. The effect at x is the
interaction block evaluated at [1, x] (the T main effect acts as its
intercept), and its standard error comes from the same block of the OLS
covariance sigma2_hat (Z'Z)^-1.

Example:
    agent = LinearAgent(LinearAgentConfig())
    fit = agent.fit(data, seed=0)
"""

from __future__ import annotations

from typing import TYPE_CHECKING, ClassVar

import numpy as np
from scipy import linalg

from causalsynth.constants import AGENT_LINEAR
from causalsynth.exceptions import AgentError
from causalsynth.logging import get_logger
from causalsynth.models import AgentPosterior, LinearAgentConfig
from causalsynth.plugins.base import Agent, AgentFit

if TYPE_CHECKING:
    from causalsynth.models import ObservedData

logger = get_logger(__name__)


def design_names(covariates: list[str]) -> list[str]:
    """Column labels of [1, X, T, T*X]."""
    return ["intercept", *covariates, "t", *(f"t:{name}" for name in covariates)]


def numerical_rank(matrix: np.ndarray) -> tuple[int, np.ndarray]:
    """Rank from a column-pivoted QR, plus the pivot order.

    Columns ``pivots[rank:]`` are the ones that depend on the others.
    """
    r, pivots = linalg.qr(matrix, mode="r", pivoting=True)
    diagonal = np.abs(np.diag(r))
    if diagonal.size == 0 or diagonal[0] == 0.0:
        return 0, pivots
    tol = diagonal[0] * max(matrix.shape) * np.finfo(np.float64).eps
    return int(np.sum(diagonal > tol)), pivots


class LinearAgent(Agent):
    """OLS T-interaction model.

    Class Attributes:
        name: Agent identifier ("lm").
        config_schema: Configuration model (LinearAgentConfig).
    """

    name: ClassVar[str] = AGENT_LINEAR
    config_schema: ClassVar[type[LinearAgentConfig]] = LinearAgentConfig

    def __init__(self, config: LinearAgentConfig) -> None:
        super().__init__(config)
        self._effect_coef: np.ndarray | None = None
        self._effect_cov: np.ndarray | None = None
        self._p = 0

    def fit(
        self,
        data: ObservedData,
        *,
        seed: int,
        truth: np.ndarray | None = None,
    ) -> AgentFit:
        """Fit OLS and return in-sample effects.

        Raises:
            AgentError: If the design is rank deficient (the message names the
                dependent columns) or leaves no residual degrees of freedom.
        """
        n, p = data.n, data.p
        ones = np.ones((n, 1))
        design = np.hstack([ones, data.x, data.t[:, None], data.t[:, None] * data.x])
        n_cols = design.shape[1]
        names = design_names(data.covariate_names or [f"x{k + 1}" for k in range(p)])

        rank, pivots = numerical_rank(design)
        if rank < n_cols:
            dependent = sorted(names[int(c)] for c in pivots[rank:])
            raise AgentError(
                "Design matrix is rank deficient",
                self.name,
                {"rank": rank, "columns": n_cols, "dependent": dependent},
            )
        dof = n - n_cols
        if dof <= 0:
            raise AgentError(
                "No residual degrees of freedom", self.name, {"n": n, "columns": n_cols}
            )

        gram = linalg.cho_factor(design.T @ design)
        coef = linalg.cho_solve(gram, design.T @ data.y)
        residual = data.y - design @ coef
        sigma2_hat = float(residual @ residual) / dof
        cov = sigma2_hat * linalg.cho_solve(gram, np.eye(n_cols))

        effect = slice(p + 1, n_cols)
        self._effect_coef = coef[effect]
        self._effect_cov = cov[effect, effect]
        self._p = p
        self._fitted = True

        logger.debug("Fitted linear agent", extra={"n": n, "p": p, "sigma2_hat": sigma2_hat})
        result = self.estimate(data.x)
        return result.model_copy(update={"metadata": {"sigma2_hat": sigma2_hat, "dof": dof}})

    def estimate(self, x: np.ndarray, *, truth: np.ndarray | None = None) -> AgentFit:
        if self._effect_coef is None or self._effect_cov is None:
            raise AgentError("Agent is not fitted", self.name)
        if x.shape[1] != self._p:
            raise AgentError(
                "Covariate dimension differs from the training data",
                self.name,
                {"expected": self._p, "got": x.shape[1]},
            )
        rows = np.column_stack([np.ones(x.shape[0]), x])
        tau_hat = rows @ self._effect_coef
        variance = np.einsum("ij,jk,ik->i", rows, self._effect_cov, rows)
        se = np.sqrt(np.maximum(variance, 0.0))
        return AgentFit(name=self.name, tau_hat=tau_hat, se=se)


def fit_linear_agent(data: ObservedData, *, j: int = 1) -> AgentPosterior:
    """Fit the linear agent and return its posterior as agent ``j``."""
    agent = LinearAgent(LinearAgentConfig())
    return agent.fit(data, seed=0).posterior(j)
