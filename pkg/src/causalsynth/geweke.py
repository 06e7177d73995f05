"""Joint-distribution test of the Gibbs sampler.

Two simulators of the joint law of (parameters, data) are compared:

- marginal-conditional: draw every parameter and field from the prior, then
  y from the likelihood, independently each time;
- successive-conditional: alternate one Gibbs sweep given y with a fresh
  draw of y given the parameters.

A correct sampler leaves the joint law invariant, so monitored statistics
have the same mean under both simulators. The standard error of the
successive chain uses batch means to absorb autocorrelation.

Example:
    result = geweke_test(geweke_priors(2), SamplerSettings(m=3), n_draws=5000)
    assert result.passed()
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from causalsynth import sampler
from causalsynth.cache import ConditioningCache
from causalsynth.constants import (
    GEWEKE_AGENTS,
    GEWEKE_BATCHES,
    GEWEKE_DRAWS,
    GEWEKE_IG_DELTA,
    GEWEKE_IG_ETA,
    GEWEKE_MIN_DRAWS,
    GEWEKE_N,
    GEWEKE_Z_THRESHOLD,
)
from causalsynth.exceptions import CausalSynthError
from causalsynth.logging import get_logger
from causalsynth.models import (
    AgentPosterior,
    Hyperparams,
    InverseGamma,
    LatentState,
    ObservedData,
    PhiBounds,
    Priors,
    SamplerSettings,
)
from causalsynth.nngp import sample_field
from causalsynth.utils import spawn_rng

logger = get_logger(__name__)


@dataclass(frozen=True)
class GewekeResult:
    """z-scores of the monitored statistics."""

    z_scores: dict[str, float]
    n_draws: int

    @property
    def max_abs_z(self) -> float:
        return max(abs(z) for z in self.z_scores.values())

    @property
    def worst(self) -> str:
        """Name of the statistic with the largest |z|."""
        return max(self.z_scores, key=lambda name: abs(self.z_scores[name]))

    def passed(self, threshold: float = GEWEKE_Z_THRESHOLD) -> bool:
        return self.max_abs_z < threshold


def geweke_priors(n_agents: int = GEWEKE_AGENTS) -> Priors:
    """Informative priors with finite variances for every monitored statistic."""
    informative = InverseGamma(delta=GEWEKE_IG_DELTA, eta=GEWEKE_IG_ETA)
    bounds = PhiBounds(lower=0.1, upper=2.0)
    return Priors(
        bar_beta=[0.0] + [1.0 / n_agents] * n_agents,
        bar_mu=0.0,
        ig_sigma=informative,
        ig_mu=informative,
        ig_beta=[informative] * (n_agents + 1),
        phi_bounds_mu=bounds,
        phi_bounds_beta=bounds,
    )


def _design(
    n: int, n_agents: int, seed: int
) -> tuple[ObservedData, list[AgentPosterior]]:
    rng = spawn_rng(seed, 0)
    x = rng.standard_normal((n, 2))
    t = (np.arange(n) % 2).astype(np.float64)
    data = ObservedData(y=np.zeros(n), t=t, x=x, pi=np.full(n, 0.5))
    agents = [
        AgentPosterior(
            j=j,
            name=f"agent{j}",
            tau_hat=rng.standard_normal(n),
            se=rng.uniform(0.5, 1.0, n),
        )
        for j in range(1, n_agents + 1)
    ]
    return data, agents


def _draw_prior(
    priors: Priors,
    graphs: sampler.FieldGraphs,
    agents: Sequence[AgentPosterior],
    rng: np.random.Generator,
) -> tuple[LatentState, Hyperparams]:
    view = sampler.prior_view(priors)
    n_fields = len(agents) + 1
    sigma2 = sampler.draw_inverse_gamma(view.ig_sigma.shape, view.ig_sigma.scale, rng)
    tau2_mu = sampler.draw_inverse_gamma(view.ig_mu.shape, view.ig_mu.scale, rng)
    tau2_beta = np.array([sampler.draw_inverse_gamma(p.shape, p.scale, rng) for p in view.ig_beta])
    phi_mu = float(rng.uniform(view.bounds_mu.lower, view.bounds_mu.upper))
    phi_beta = rng.uniform(view.bounds_beta.lower, view.bounds_beta.upper, n_fields)

    mu = sample_field(graphs.mu, phi_mu, tau2_mu, view.bar_mu, rng)
    beta = np.column_stack(
        [
            sample_field(
                graphs.beta, float(phi_beta[k]), float(tau2_beta[k]), float(view.bar_beta[k]), rng
            )
            for k in range(n_fields)
        ]
    )
    a, b = sampler.agent_moments(agents)
    f = a + np.sqrt(b) * rng.standard_normal(a.shape)
    latent = LatentState(mu=mu, beta=beta, f=f)
    hyper = Hyperparams(
        sigma2=sigma2, tau2_mu=tau2_mu, tau2_beta=tau2_beta, phi_mu=phi_mu, phi_beta=phi_beta
    )
    return latent, hyper


def _draw_outcome(
    data: ObservedData, latent: LatentState, hyper: Hyperparams, rng: np.random.Generator
) -> ObservedData:
    noise = math.sqrt(hyper.sigma2) * rng.standard_normal(data.n)
    y = latent.mu + data.t * latent.tau() + noise
    return data.model_copy(update={"y": y})


def _statistics(latent: LatentState, hyper: Hyperparams) -> dict[str, float]:
    stats = {
        "sigma2": hyper.sigma2,
        "tau2_mu": hyper.tau2_mu,
        "phi_mu": hyper.phi_mu,
        "mean_mu": float(latent.mu.mean()),
        "mean_tau": float(latent.tau().mean()),
    }
    for k in range(latent.beta.shape[1]):
        stats[f"tau2_{sampler.beta_field(k)}"] = float(hyper.tau2_beta[k])
        stats[f"phi_{sampler.beta_field(k)}"] = float(hyper.phi_beta[k])
        stats[f"mean_{sampler.beta_field(k)}"] = float(latent.beta[:, k].mean())
    return stats


def _batch_mean_se(values: np.ndarray, batches: int) -> float:
    size = values.shape[0] // batches
    means = values[: size * batches].reshape(batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


def geweke_test(
    priors: Priors,
    settings: SamplerSettings,
    *,
    n: int = GEWEKE_N,
    n_agents: int = GEWEKE_AGENTS,
    n_draws: int = GEWEKE_DRAWS,
    seed: int = 0,
    batches: int = GEWEKE_BATCHES,
) -> GewekeResult:
    """Compare marginal-conditional and successive-conditional simulators.

    Args:
        priors: Prior specification; every monitored statistic needs a finite
            prior variance, so inverse-gamma shapes should exceed 2.
        settings: Only ``m`` and ``phi_proposal_sd`` are used.
        n: Units in the synthetic design.
        n_agents: Number of agents.
        n_draws: Draws per simulator.
        seed: Base seed for the design and both simulators.
        batches: Batch count for the successive-chain standard error.

    Returns:
        z-score per monitored statistic.

    Raises:
        CausalSynthError: If ``n_draws`` is too small for batch means.
    """
    if n_draws < max(GEWEKE_MIN_DRAWS, 2 * batches):
        raise CausalSynthError(
            "insufficient draws for the joint-distribution test",
            {"n_draws": n_draws, "minimum": max(GEWEKE_MIN_DRAWS, 2 * batches)},
        )

    data, agents = _design(n, n_agents, seed)
    graphs = sampler.build_field_graphs(data, settings)
    resolved = sampler.resolve_priors(priors, data, n_agents, graphs)

    forward_rng = spawn_rng(seed, 1)
    forward: list[dict[str, float]] = []
    for _ in range(n_draws):
        latent, hyper = _draw_prior(resolved, graphs, agents, forward_rng)
        forward.append(_statistics(latent, hyper))

    chain_rng = spawn_rng(seed, 2)
    cache = ConditioningCache()
    latent, hyper = _draw_prior(resolved, graphs, agents, chain_rng)
    current = _draw_outcome(data, latent, hyper, chain_rng)
    successive: list[dict[str, float]] = []
    for iteration in range(n_draws):
        sweep = sampler.gibbs_sweep(
            iteration, latent, hyper, current, agents, graphs, resolved, settings, chain_rng, cache
        )
        latent, hyper = sweep.latent, sweep.hyper
        current = _draw_outcome(data, latent, hyper, chain_rng)
        successive.append(_statistics(latent, hyper))

    z_scores: dict[str, float] = {}
    for name in forward[0]:
        mc = np.array([row[name] for row in forward])
        sc = np.array([row[name] for row in successive])
        se = math.sqrt(mc.var(ddof=1) / n_draws + _batch_mean_se(sc, batches) ** 2)
        diff = float(mc.mean() - sc.mean())
        if se > 0.0:
            z_scores[name] = diff / se
        else:
            z_scores[name] = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)

    result = GewekeResult(z_scores=z_scores, n_draws=n_draws)
    logger.info(
        "Joint-distribution test finished",
        extra={"n_draws": n_draws, "max_abs_z": result.max_abs_z, "worst": result.worst},
    )
    return result
