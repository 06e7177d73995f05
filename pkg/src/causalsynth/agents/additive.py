"""Additive model agent.

Fits

    Y = a1 + sum_k s1k(X_k) + T (a2 + sum_k s2k(X_k)) + eps

as one penalized least-squares problem. Each encoded column owns one block
holding both of its smoothers:

- continuous columns use a cubic truncated-power spline on the standardized
  values, with a ridge penalty on the knot terms chosen by generalized
  cross-validation over a log-spaced grid;
- columns with few distinct values use level indicators (group means).

Smoothers are centered with the fit weights (effect smoothers over treated
rows only), so the two intercepts carry the levels. The effect estimate is
a2 + sum_k s2k(x). Standard errors are the pointwise sd of the effect over
exponential-weight bootstrap refits, which reuse the knots and smoothing
parameters of the main fit.

Smoothing parameters are chosen by GCV during a few backfitting cycles, with
each block updated on its partial residual. The coefficients then come from
a single joint solve, the fixed point backfitting would converge to.

Example:
    agent = AdditiveAgent(AdditiveAgentConfig(bootstrap_reps=200))
    fit = agent.fit(data, seed=7)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, ClassVar, Literal

import numpy as np
from scipy import linalg

from causalsynth.constants import (
    AGENT_ADDITIVE,
    AM_BOOTSTRAP_REPS,
    AM_DISCRETE_MAX_LEVELS,
    AM_LAMBDA_GRID,
    AM_MIN_ROWS,
    AM_RIDGE_FLOOR,
)
from causalsynth.exceptions import AgentError
from causalsynth.logging import get_logger
from causalsynth.models import AdditiveAgentConfig, AgentPosterior
from causalsynth.plugins.base import Agent, AgentFit
from causalsynth.utils import spawn_rng

if TYPE_CHECKING:
    from causalsynth.models import ObservedData

logger = get_logger(__name__)

LAMBDAS = np.logspace(AM_LAMBDA_GRID[0], AM_LAMBDA_GRID[1], int(AM_LAMBDA_GRID[2]))
_POLY_DEGREE = 3


# =============================================================================
# BASES
# =============================================================================


@dataclass(frozen=True)
class ColumnBasis:
    """Basis of one encoded column, fixed by the main fit."""

    kind: Literal["spline", "discrete"]
    center: float
    scale: float
    knots: np.ndarray
    levels: np.ndarray
    column_scale: np.ndarray

    @classmethod
    def from_values(cls, values: np.ndarray, max_knots: int) -> ColumnBasis:
        unique = np.unique(values)
        if unique.size <= AM_DISCRETE_MAX_LEVELS:
            return cls(
                kind="discrete",
                center=0.0,
                scale=1.0,
                knots=np.empty(0),
                levels=unique,
                column_scale=np.ones(max(unique.size - 1, 0)),
            )
        center, scale = float(values.mean()), float(values.std())
        z = (values - center) / scale
        n_knots = min(max_knots, max(1, unique.size // 4))
        knots = np.unique(np.quantile(z, np.linspace(0.0, 1.0, n_knots + 2)[1:-1]))
        raw = _spline_columns(z, knots)
        sd = raw.std(axis=0)
        return cls(
            kind="spline",
            center=center,
            scale=scale,
            knots=knots,
            levels=np.empty(0),
            column_scale=np.where(sd > 0.0, sd, 1.0),
        )

    @property
    def size(self) -> int:
        return int(self.column_scale.shape[0])

    @property
    def penalized(self) -> np.ndarray:
        """1 for penalized basis columns (knot terms), 0 otherwise."""
        if self.kind == "discrete":
            return np.zeros(self.size)
        return np.concatenate([np.zeros(_POLY_DEGREE), np.ones(self.knots.shape[0])])

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        if self.kind == "discrete":
            # Unseen values fall back to the reference level.
            return (values[:, None] == self.levels[None, 1:]).astype(np.float64)
        z = (values - self.center) / self.scale
        return _spline_columns(z, self.knots) / self.column_scale


def _spline_columns(z: np.ndarray, knots: np.ndarray) -> np.ndarray:
    poly = np.column_stack([z**d for d in range(1, _POLY_DEGREE + 1)])
    hinge = np.maximum(z[:, None] - knots[None, :], 0.0) ** 3
    return np.hstack([poly, hinge])


# =============================================================================
# WEIGHTED BLOCKS
# =============================================================================


@dataclass(frozen=True)
class _Block:
    """Centered design [B - c, T (B - d)] of one column under fixed weights."""

    design: np.ndarray
    center_main: np.ndarray
    center_effect: np.ndarray
    gram: np.ndarray
    weighted_t: np.ndarray
    penalty: np.ndarray
    ridge: float
    penalty_scale: float

    @classmethod
    def build(cls, basis: ColumnBasis, values: np.ndarray, t: np.ndarray, w: np.ndarray) -> _Block:
        raw = basis.evaluate(values)
        wt = w * t
        center_main = (w @ raw) / w.sum()
        center_effect = (wt @ raw) / wt.sum()
        design = np.hstack([raw - center_main, t[:, None] * (raw - center_effect)])
        weighted_t = (design * w[:, None]).T
        penalized = basis.penalized
        return cls(
            design=design,
            center_main=center_main,
            center_effect=center_effect,
            gram=weighted_t @ design,
            weighted_t=weighted_t,
            penalty=np.concatenate([penalized, penalized]),
            ridge=AM_RIDGE_FLOOR * float(w.sum()),
            penalty_scale=float(w.sum()),
        )

    def smoother(self, lam: float) -> tuple[np.ndarray, float]:
        """Map from partial residuals to coefficients, and its effective dof."""
        if self.design.shape[1] == 0:
            return np.zeros((0, self.design.shape[0])), 0.0
        system = self.gram + np.diag(lam * self.penalty_scale * self.penalty + self.ridge)
        operator = linalg.solve(system, self.weighted_t, assume_a="pos")
        edf = float(np.sum(operator * self.design.T))
        return operator, edf


@dataclass(frozen=True)
class AdditiveFit:
    """Coefficients of one backfitted model."""

    intercepts: np.ndarray
    coefs: tuple[np.ndarray, ...]
    center_effect: tuple[np.ndarray, ...]
    lambdas: tuple[float, ...]
    cycles: int

    def effect(self, bases: list[ColumnBasis], x: np.ndarray) -> np.ndarray:
        tau = np.full(x.shape[0], float(self.intercepts[1]))
        for k, basis in enumerate(bases):
            q = basis.size
            tau += (basis.evaluate(x[:, k]) - self.center_effect[k]) @ self.coefs[k][q:]
        return tau


# =============================================================================
# FITTING
# =============================================================================


def select_lambdas(
    y: np.ndarray,
    t: np.ndarray,
    blocks: list[_Block],
    w: np.ndarray,
    cycles: int,
) -> tuple[tuple[float, ...], int]:
    """Choose one smoothing parameter per block by GCV inside backfitting cycles.

    Each cycle refits the intercepts, then every block on its partial residual
    with the GCV-best parameter from the grid. Stops early once a cycle leaves
    every choice unchanged.

    Returns:
        The chosen parameters and the number of cycles run.
    """
    n = y.shape[0]
    base_design = np.column_stack([np.ones(n), t])
    base_operator = linalg.solve(
        (base_design * w[:, None]).T @ base_design, (base_design * w[:, None]).T, assume_a="pos"
    )
    grids = [[block.smoother(float(lam)) for lam in LAMBDAS] for block in blocks]
    chosen = [-1] * len(blocks)
    components = [np.zeros(n) for _ in blocks]
    base_fit = np.zeros(n)
    fitted = np.zeros(n)

    cycle = 0
    for cycle in range(1, cycles + 1):
        new_base = base_design @ (base_operator @ (y - fitted + base_fit))
        fitted += new_base - base_fit
        base_fit = new_base

        changed = False
        for b, block in enumerate(blocks):
            partial = y - fitted + components[b]
            best = _gcv_choice(partial, w, block, grids[b])
            changed |= best != chosen[b]
            chosen[b] = best
            update = block.design @ (grids[b][best][0] @ partial)
            fitted += update - components[b]
            components[b] = update
        if not changed:
            break

    return tuple(float(LAMBDAS[best]) for best in chosen), cycle


def solve_joint(
    y: np.ndarray,
    t: np.ndarray,
    blocks: list[_Block],
    w: np.ndarray,
    lambdas: tuple[float, ...],
) -> tuple[np.ndarray, tuple[np.ndarray, ...]]:
    """Penalized weighted least squares over the intercepts and every block at once.

    This is the fixed point backfitting converges to, reached in one solve.

    Returns:
        The intercepts (a1, a2) and the coefficients of each block.
    """
    n = y.shape[0]
    design = np.hstack([np.column_stack([np.ones(n), t]), *(block.design for block in blocks)])
    diagonal = np.concatenate(
        [
            np.zeros(2),
            *(
                lam * block.penalty_scale * block.penalty + block.ridge
                for block, lam in zip(blocks, lambdas, strict=True)
            ),
        ]
    )
    weighted = design * w[:, None]
    coef = linalg.solve(weighted.T @ design + np.diag(diagonal), weighted.T @ y, assume_a="pos")
    bounds = np.cumsum([2, *(block.design.shape[1] for block in blocks)])
    return coef[:2], tuple(np.split(coef[2:], bounds[1:-1] - 2)) if blocks else ()


def fit_additive(
    y: np.ndarray,
    t: np.ndarray,
    x: np.ndarray,
    w: np.ndarray,
    bases: list[ColumnBasis],
    config: AdditiveAgentConfig,
    *,
    lambdas: tuple[float, ...] | None = None,
) -> AdditiveFit:
    """Fit the additive model under weights ``w``.

    Smoothing parameters come from GCV backfitting cycles unless given; the
    coefficients always come from the joint solve.

    Args:
        y: Outcomes.
        t: Treatment indicators.
        x: Encoded covariates, one column per basis.
        w: Nonnegative observation weights.
        bases: Column bases fixed by the main fit.
        config: GCV cycle count.
        lambdas: Frozen smoothing parameters, as used by bootstrap refits.

    Raises:
        numpy.linalg.LinAlgError: If a penalized system is singular.
    """
    blocks = [_Block.build(basis, x[:, k], t, w) for k, basis in enumerate(bases)]
    cycles = 0
    if lambdas is None:
        lambdas, cycles = select_lambdas(y, t, blocks, w, config.gcv_cycles)
    intercepts, coefs = solve_joint(y, t, blocks, w, lambdas)
    return AdditiveFit(
        intercepts=intercepts,
        coefs=coefs,
        center_effect=tuple(block.center_effect for block in blocks),
        lambdas=lambdas,
        cycles=cycles,
    )


def _gcv_choice(
    partial: np.ndarray,
    w: np.ndarray,
    block: _Block,
    grid: list[tuple[np.ndarray, float]],
) -> int:
    n = int(np.count_nonzero(w))
    scores = []
    for operator, edf in grid:
        residual = partial - block.design @ (operator @ partial)
        denom = (n - edf) ** 2
        scores.append(n * float(w @ residual**2) / denom if n - edf > 0 else math.inf)
    return int(np.argmin(scores))


# =============================================================================
# AGENT
# =============================================================================


class AdditiveAgent(Agent):
    """Backfitted additive model with bootstrap standard errors.

    Class Attributes:
        name: Agent identifier ("am").
        config_schema: Configuration model (AdditiveAgentConfig).
    """

    name: ClassVar[str] = AGENT_ADDITIVE
    config_schema: ClassVar[type[AdditiveAgentConfig]] = AdditiveAgentConfig

    def __init__(self, config: AdditiveAgentConfig) -> None:
        super().__init__(config)
        self._settings = config
        self._bases: list[ColumnBasis] = []
        self._main: AdditiveFit | None = None
        self._replicates: list[AdditiveFit] = []

    def fit(
        self,
        data: ObservedData,
        *,
        seed: int,
        truth: np.ndarray | None = None,
    ) -> AgentFit:
        """Fit on the data, then refit under bootstrap weights.

        Raises:
            AgentError: If n < 20, fewer than two bootstrap replications are
                configured, or a penalized system is singular.
        """
        config = self._settings
        if data.n < AM_MIN_ROWS:
            raise AgentError(
                "Too few rows for the additive model", self.name, {"n": data.n, "min": AM_MIN_ROWS}
            )
        if config.bootstrap_reps < 2:
            raise AgentError(
                "se requires replications",
                self.name,
                {"bootstrap_reps": config.bootstrap_reps},
            )

        try:
            self._bases = [
                ColumnBasis.from_values(data.x[:, k], config.max_knots) for k in range(data.p)
            ]
            main = fit_additive(data.y, data.t, data.x, np.ones(data.n), self._bases, config)
            replicates = []
            for r in range(config.bootstrap_reps):
                weights = spawn_rng(seed, r).exponential(1.0, data.n)
                replicates.append(
                    fit_additive(
                        data.y,
                        data.t,
                        data.x,
                        weights,
                        self._bases,
                        config,
                        lambdas=main.lambdas,
                    )
                )
        except linalg.LinAlgError as e:
            raise AgentError("Smoother system is singular", self.name, {"reason": str(e)}) from e

        self._main = main
        self._replicates = replicates
        self._fitted = True
        logger.debug(
            "Fitted additive agent",
            extra={"cycles": main.cycles, "bootstrap_reps": len(replicates)},
        )
        result = self.estimate(data.x)
        return result.model_copy(
            update={"metadata": {"cycles": main.cycles, "lambdas": list(main.lambdas)}}
        )

    def estimate(self, x: np.ndarray, *, truth: np.ndarray | None = None) -> AgentFit:
        if self._main is None:
            raise AgentError("Agent is not fitted", self.name)
        if x.shape[1] != len(self._bases):
            raise AgentError(
                "Covariate dimension differs from the training data",
                self.name,
                {"expected": len(self._bases), "got": x.shape[1]},
            )
        tau_hat = self._main.effect(self._bases, x)
        boot = np.stack([fit.effect(self._bases, x) for fit in self._replicates])
        se = boot.std(axis=0, ddof=1)
        return AgentFit(name=self.name, tau_hat=tau_hat, se=se)


def fit_additive_agent(
    data: ObservedData,
    *,
    bootstrap_reps: int = AM_BOOTSTRAP_REPS,
    seed: int = 0,
    j: int = 1,
) -> AgentPosterior:
    """Fit the additive agent and return its posterior as agent ``j``."""
    agent = AdditiveAgent(AdditiveAgentConfig(bootstrap_reps=bootstrap_reps))
    return agent.fit(data, seed=seed).posterior(j)
