"""Nearest-neighbor T-learner agent.

The effect at x is the mean outcome of the k nearest treated units minus the
mean outcome of the k nearest control units, with distances measured on
covariates standardized by the training mean and sd. The standard error
comes from half-sampling: each replication keeps half of every arm and uses
ceil(k/2) neighbors, and the spread of those estimates is rescaled to k
neighbors.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, ClassVar

import numpy as np
from scipy.spatial import cKDTree

from causalsynth.constants import AGENT_KNN, KNN_EXPONENT, KNN_SUBSAMPLE_REPS
from causalsynth.exceptions import AgentError
from causalsynth.logging import get_logger
from causalsynth.models import AgentPosterior, KnnAgentConfig
from causalsynth.plugins.base import Agent, AgentFit
from causalsynth.utils import spawn_rng

if TYPE_CHECKING:
    from causalsynth.models import ObservedData

logger = get_logger(__name__)


def default_k(n: int) -> int:
    """ceil(n^0.6)."""
    return math.ceil(n**KNN_EXPONENT)


def _arm_mean(tree: cKDTree, outcomes: np.ndarray, points: np.ndarray, k: int) -> np.ndarray:
    _, idx = tree.query(points, k=np.arange(1, k + 1))
    return outcomes[idx].mean(axis=1)


class KnnAgent(Agent):
    """k-nearest-neighbor T-learner with half-sampling standard errors.

    Class Attributes:
        name: Agent identifier ("knn").
        config_schema: Configuration model (KnnAgentConfig).
    """

    name: ClassVar[str] = AGENT_KNN
    config_schema: ClassVar[type[KnnAgentConfig]] = KnnAgentConfig

    def __init__(self, config: KnnAgentConfig) -> None:
        super().__init__(config)
        self._settings = config
        self._k = 0
        self._shift = np.empty(0)
        self._scale = np.empty(0)
        self._arms: tuple[tuple[cKDTree, np.ndarray], tuple[cKDTree, np.ndarray]] | None = None
        self._halves: list[tuple[tuple[cKDTree, np.ndarray], tuple[cKDTree, np.ndarray]]] = []

    @property
    def k(self) -> int:
        return self._k

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self._shift) / self._scale

    def fit(
        self,
        data: ObservedData,
        *,
        seed: int,
        truth: np.ndarray | None = None,
    ) -> AgentFit:
        """Index both arms and draw the half-samples.

        Raises:
            AgentError: If an arm has fewer than k units.
        """
        k = self._settings.k or default_k(data.n)
        treated = np.flatnonzero(data.treated)
        control = np.flatnonzero(~data.treated)
        smallest = min(treated.size, control.size)
        if smallest < k:
            raise AgentError(
                "Treatment arm smaller than k",
                self.name,
                {"k": k, "treated": int(treated.size), "control": int(control.size)},
            )

        self._k = k
        self._shift = data.x.mean(axis=0)
        sd = data.x.std(axis=0)
        self._scale = np.where(sd > 0.0, sd, 1.0)
        z = self._standardize(data.x)

        def index(rows: np.ndarray) -> tuple[cKDTree, np.ndarray]:
            return cKDTree(z[rows]), data.y[rows]

        self._arms = (index(treated), index(control))
        self._halves = []
        for r in range(self._settings.subsample_reps):
            rng = spawn_rng(seed, r)
            half_t = rng.choice(treated, size=math.ceil(treated.size / 2), replace=False)
            half_c = rng.choice(control, size=math.ceil(control.size / 2), replace=False)
            self._halves.append((index(half_t), index(half_c)))
        self._fitted = True

        logger.debug("Fitted knn agent", extra={"k": k, "reps": len(self._halves)})
        result = self.estimate(data.x)
        return result.model_copy(update={"metadata": {"k": k}})

    def estimate(self, x: np.ndarray, *, truth: np.ndarray | None = None) -> AgentFit:
        if self._arms is None:
            raise AgentError("Agent is not fitted", self.name)
        if x.shape[1] != self._shift.shape[0]:
            raise AgentError(
                "Covariate dimension differs from the training data",
                self.name,
                {"expected": self._shift.shape[0], "got": x.shape[1]},
            )
        z = self._standardize(x)
        (tree_t, y_t), (tree_c, y_c) = self._arms
        tau_hat = _arm_mean(tree_t, y_t, z, self._k) - _arm_mean(tree_c, y_c, z, self._k)

        k_half = math.ceil(self._k / 2)
        halves = np.stack(
            [
                _arm_mean(ht, hy_t, z, k_half) - _arm_mean(hc, hy_c, z, k_half)
                for (ht, hy_t), (hc, hy_c) in self._halves
            ]
        )
        variance = halves.var(axis=0, ddof=1) * k_half / self._k
        se = np.sqrt(variance)
        return AgentFit(name=self.name, tau_hat=tau_hat, se=se)


def fit_knn_agent(
    data: ObservedData,
    *,
    k: int | None = None,
    subsample_reps: int = KNN_SUBSAMPLE_REPS,
    seed: int = 0,
    j: int = 1,
) -> AgentPosterior:
    """Fit the nearest-neighbor agent and return its posterior as agent ``j``."""
    agent = KnnAgent(KnnAgentConfig(k=k, subsample_reps=subsample_reps))
    return agent.fit(data, seed=seed).posterior(j)
