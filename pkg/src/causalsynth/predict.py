"""Posterior prediction of the treatment effect at new covariate points.

For a new point x0 the coefficient fields are extended by conditioning on
the m nearest training points (no ordering restriction):

    beta_k(x0) | draw  ~  N(bar_k + b . (beta_k(N) - bar_k), tau2_k f)

with (b, f) computed under the draw's range parameter. Agent factors at x0
are drawn from the agents' own estimates N(tau_hat_j(x0), se_j(x0)^2) and
combined with the coefficients exactly as in the training model.

Example:
    summary = predict_tau_at(x0, values, chain.draws, chain.graphs.beta, bar_beta, rng)
    print(summary.mean, summary.lo95, summary.hi95)
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from causalsynth.constants import CORRELATION_JITTER
from causalsynth.data import apply_encoding
from causalsynth.exceptions import PredictionError
from causalsynth.logging import get_logger
from causalsynth.models import EncodingReport, PosteriorDraws, synthesize_tau
from causalsynth.utils import spawn_rng, summarize_draws

if TYPE_CHECKING:
    from causalsynth.nngp import NngpGraph
    from causalsynth.sampler import ChainResult

logger = get_logger(__name__)


@dataclass(frozen=True)
class AgentValues:
    """Agent estimates at one prediction point, in agent order 1..J."""

    tau_hat: np.ndarray
    se: np.ndarray
    names: tuple[str, ...] = ()

    def label(self, j: int) -> str:
        return self.names[j] if j < len(self.names) else f"agent{j + 1}"

    def check(self, n_agents: int) -> None:
        """Raise PredictionError naming agents with missing or unusable values."""
        tau_hat = np.asarray(self.tau_hat, dtype=np.float64)
        se = np.asarray(self.se, dtype=np.float64)
        if tau_hat.shape != (n_agents,) or se.shape != (n_agents,):
            raise PredictionError(
                f"Expected values for {n_agents} agents",
                {"tau_hat": list(tau_hat.shape), "se": list(se.shape)},
            )
        missing = [
            self.label(j)
            for j in range(n_agents)
            if not (np.isfinite(tau_hat[j]) and np.isfinite(se[j]))
        ]
        if missing:
            raise PredictionError(
                "Missing agent values at the prediction point", {"agents": missing}
            )
        bad = [self.label(j) for j in range(n_agents) if not se[j] > 0.0]
        if bad:
            raise PredictionError("Agent standard errors must be positive", {"agents": bad})


@dataclass(frozen=True)
class PredictionSummary:
    """Posterior draws of tau(x0) and their equal-tailed summary."""

    draws: np.ndarray
    mean: float
    sd: float
    lo95: float
    hi95: float

    @property
    def width(self) -> float:
        return self.hi95 - self.lo95


# =============================================================================
# CONDITIONING ON TRAINING POINTS
# =============================================================================


def prediction_neighbors(
    x0: np.ndarray, points: np.ndarray, m: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The min(m, n) training points nearest to ``x0`` (ties by index).

    Returns:
        Neighbor indices, their distances to x0, and their pairwise distances.
    """
    dist = np.sqrt(np.sum((points - x0[None, :]) ** 2, axis=1))
    idx = np.lexsort((np.arange(points.shape[0]), dist))[: min(m, points.shape[0])]
    nb = points[idx]
    pair = np.sqrt(np.sum((nb[:, None, :] - nb[None, :, :]) ** 2, axis=2))
    return idx, dist[idx], pair


def prediction_coefficients(
    dist: np.ndarray, pair: np.ndarray, phi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Weights b and variance fractions f for every range value in ``phi``.

    Returns:
        ``b`` of shape phi.shape + (k,) and ``f`` of shape phi.shape.
    """
    phi = np.asarray(phi, dtype=np.float64)
    k = dist.shape[0]
    cov = np.exp(-pair / phi[..., None, None])
    cov = cov + CORRELATION_JITTER * np.eye(k)
    cross = np.exp(-dist / phi[..., None])
    b = np.linalg.solve(cov, cross[..., None])[..., 0]
    f = np.maximum(1.0 - np.sum(cross * b, axis=-1), 0.0)
    return b, f


def predict_beta_at(
    x0: np.ndarray,
    draws: PosteriorDraws,
    graph: NngpGraph,
    bar_beta: Sequence[float],
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample beta_0..beta_J at ``x0`` once per retained draw.

    Args:
        x0: Point in the coefficient-field coordinates (the encoded columns
            the fields depend on).
        draws: Retained chain states.
        graph: Training graph of the coefficient fields.
        bar_beta: Prior means of the coefficient fields.
        rng: Generator for the conditional draws.

    Returns:
        Array of shape (n_draws, J+1).
    """
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    if x0.shape[0] != graph.points.shape[1]:
        raise PredictionError(
            "Prediction point has the wrong number of coordinates",
            {"expected": graph.points.shape[1], "got": x0.shape[0]},
        )
    idx, dist, pair = prediction_neighbors(x0, graph.points, graph.m)
    bar = np.asarray(bar_beta, dtype=np.float64)

    # Range values repeat across draws after rejected moves; solve once per value.
    unique_phi, inverse = np.unique(draws.phi_beta, return_inverse=True)
    b_unique, f_unique = prediction_coefficients(dist, pair, unique_phi)
    inverse = inverse.reshape(draws.phi_beta.shape)
    b = b_unique[inverse]
    f = f_unique[inverse]

    centered = np.transpose(draws.beta[:, idx, :], (0, 2, 1)) - bar[None, :, None]
    mean = bar[None, :] + np.sum(b * centered, axis=-1)
    sd = np.sqrt(draws.tau2_beta * f)
    return np.asarray(mean + sd * rng.standard_normal(mean.shape))


def predict_tau_at(
    x0: np.ndarray,
    agent_values: AgentValues,
    draws: PosteriorDraws,
    graph: NngpGraph,
    bar_beta: Sequence[float],
    rng: np.random.Generator,
) -> PredictionSummary:
    """Posterior sample of tau(x0) with its summary.

    Raises:
        PredictionError: If an agent value is missing or has a nonpositive se.
    """
    agent_values.check(draws.n_agents)
    beta = predict_beta_at(x0, draws, graph, bar_beta, rng)
    f = agent_values.tau_hat[None, :] + agent_values.se[None, :] * rng.standard_normal(
        (draws.n_draws, draws.n_agents)
    )
    tau = synthesize_tau(beta, f)
    summary = summarize_draws(tau[:, None]).iloc[0]
    return PredictionSummary(
        draws=tau,
        mean=float(summary["mean"]),
        sd=float(summary["sd"]),
        lo95=float(summary["lo95"]),
        hi95=float(summary["hi95"]),
    )


# =============================================================================
# BATCH PREDICTION
# =============================================================================


def read_prediction_csv(
    path: Path, encoding: EncodingReport, agent_names: Sequence[str]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read covariates and ``tau_hat_j, se_j`` columns of prediction points.

    Returns:
        Encoded covariates (n0, p), agent estimates (n0, J) and ses (n0, J).

    Raises:
        PredictionError: If agent columns are missing, naming the agents.
        EncodingError: If the covariates do not match the training encoding.
    """
    frame = pd.read_csv(path)
    n_agents = len(agent_names)
    agent_columns = [c for j in range(1, n_agents + 1) for c in (f"tau_hat_{j}", f"se_{j}")]
    missing = [
        agent_names[j - 1]
        for j in range(1, n_agents + 1)
        if f"tau_hat_{j}" not in frame.columns or f"se_{j}" not in frame.columns
    ]
    if missing:
        raise PredictionError(f"Prediction file {path} lacks agent columns", {"agents": missing})
    covariates = frame.drop(columns=agent_columns)
    x = apply_encoding(covariates, encoding)
    tau_hat = frame[[f"tau_hat_{j}" for j in range(1, n_agents + 1)]].to_numpy(dtype=np.float64)
    se = frame[[f"se_{j}" for j in range(1, n_agents + 1)]].to_numpy(dtype=np.float64)
    return x, tau_hat, se


def predict_points(
    chain: ChainResult,
    x: np.ndarray,
    tau_hat: np.ndarray,
    se: np.ndarray,
    *,
    seed: int,
    agent_names: Sequence[str] = (),
) -> pd.DataFrame:
    """Summaries of tau at every row of ``x`` (encoded covariates).

    Row i draws from stream ``(seed, i)``, so a rerun with the same seed
    reproduces every summary.

    Returns:
        Frame with columns mean, sd, lo95, hi95, width.
    """
    if chain.priors.bar_beta is None:
        raise PredictionError("Chain priors are not resolved")
    columns = list(chain.graphs.beta_columns)
    rows = []
    for i in range(x.shape[0]):
        values = AgentValues(tau_hat=tau_hat[i], se=se[i], names=tuple(agent_names))
        try:
            summary = predict_tau_at(
                x[i, columns],
                values,
                chain.draws,
                chain.graphs.beta,
                chain.priors.bar_beta,
                spawn_rng(seed, i),
            )
        except PredictionError as e:
            raise PredictionError(e.message, {"row": i, **e.details}) from e
        rows.append(
            {
                "mean": summary.mean,
                "sd": summary.sd,
                "lo95": summary.lo95,
                "hi95": summary.hi95,
                "width": summary.width,
            }
        )
    logger.info("Predicted treatment effects", extra={"points": x.shape[0]})
    return pd.DataFrame(rows, columns=["mean", "sd", "lo95", "hi95", "width"])
