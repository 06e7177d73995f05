"""Gibbs sampler for the synthesis model.

The model for unit i is

    y_i = mu_i + T_i (beta_0i + sum_j beta_ji f_ji) + eps_i,   eps_i ~ N(0, sigma2)

with NNGP priors on mu (over covariates plus propensity) and on each
beta_j (over the coefficient covariates), agent priors f_ji ~ N(a_ji, b_ji),
inverse-gamma priors on every variance and uniform priors on the ranges.

One sweep updates, in order: beta, mu, f, tau2_beta, tau2_mu, phi, sigma2.
Every step is a module-level function so tests can swap a single update.

Field updates are single-site: point i's values are drawn from their full
conditional given all other points. The prior part of that conditional has
precision

    gamma_i = 1/(tau2 F_i) + sum_{t: i in N(t)} B_ti^2 / (tau2 F_t)

and linear term m_i collecting the own-neighborhood and children terms. The
residuals r_t = v*_t - B_t . v*_N(t) are kept current across the sweep so each
m_i costs O(|children(i)|).

Example:
    draws, diagnostics = run_chain(data, agents, Priors(), SamplerSettings(seed=7))
    tau_mean = draws.tau.mean(axis=0)
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import stats

from causalsynth.agents.propensity import resolve_propensity
from causalsynth.cache import ConditioningCache
from causalsynth.data import require_valid
from causalsynth.exceptions import ConfigError, DataValidationError, SamplerError
from causalsynth.logging import get_logger
from causalsynth.models import (
    AgentPosterior,
    ChainDiagnostics,
    Hyperparams,
    InverseGamma,
    LatentState,
    ObservedData,
    PhiBounds,
    PosteriorDraws,
    Priors,
    SamplerSettings,
)
from causalsynth.nngp import (
    BatchedCoeffs,
    NngpGraph,
    build_graph,
    conditioning_arrays,
    field_residuals,
    nngp_log_density,
)
from causalsynth.utils import effective_sample_size, max_pairwise_distance, spawn_rng

logger = get_logger(__name__)

FIELD_MU = "mu"


def beta_field(k: int) -> str:
    """Cache and diagnostics name of coefficient field k (0 is the intercept)."""
    return f"beta{k}"


# =============================================================================
# CONTAINERS
# =============================================================================


@dataclass(frozen=True, eq=False)
class FieldGraphs:
    """Neighbor graphs of the coefficient fields and of the prognostic field."""

    beta: NngpGraph
    mu: NngpGraph
    beta_columns: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class PhiUpdate:
    """Result of one Metropolis pass over all range parameters."""

    phi_mu: float
    phi_beta: np.ndarray
    accepted_mu: bool
    accepted_beta: np.ndarray


@dataclass(frozen=True, eq=False)
class SweepResult:
    latent: LatentState
    hyper: Hyperparams
    phi: PhiUpdate


@dataclass(frozen=True, eq=False)
class ChainResult:
    """Everything a finished chain produced, including what prediction needs.

    Attributes:
        draws: Retained states.
        diagnostics: Acceptance rates, ESS and log joint trace.
        priors: Priors with every data-dependent default filled in.
        graphs: Training graphs (coefficient and prognostic fields).
        data: The data the chain ran on, with propensities attached.
    """

    draws: PosteriorDraws
    diagnostics: ChainDiagnostics
    priors: Priors
    graphs: FieldGraphs
    data: ObservedData


@dataclass(frozen=True)
class PriorView:
    """Resolved priors with every optional field narrowed."""

    bar_beta: np.ndarray
    bar_mu: float
    ig_sigma: InverseGamma
    ig_mu: InverseGamma
    ig_beta: list[InverseGamma]
    bounds_mu: PhiBounds
    bounds_beta: PhiBounds


def prior_view(priors: Priors) -> PriorView:
    if (
        priors.bar_beta is None
        or priors.bar_mu is None
        or priors.ig_beta is None
        or priors.phi_bounds_mu is None
        or priors.phi_bounds_beta is None
    ):
        raise ValueError("Priors must be resolved against the data before sampling")
    return PriorView(
        bar_beta=np.asarray(priors.bar_beta, dtype=np.float64),
        bar_mu=float(priors.bar_mu),
        ig_sigma=priors.ig_sigma,
        ig_mu=priors.ig_mu,
        ig_beta=list(priors.ig_beta),
        bounds_mu=priors.phi_bounds_mu,
        bounds_beta=priors.phi_bounds_beta,
    )


def agent_moments(agents: Sequence[AgentPosterior]) -> tuple[np.ndarray, np.ndarray]:
    """Stack agent means a and variances b into (n, J) arrays."""
    a = np.column_stack([agent.tau_hat for agent in agents])
    b = np.column_stack([agent.variance for agent in agents])
    return a, b


def draw_inverse_gamma(shape: float, scale: float, rng: np.random.Generator) -> float:
    """One draw from IG(shape, scale), i.e. 1/Gamma(shape, rate=scale)."""
    if not (shape > 0.0 and scale > 0.0):
        raise ValueError(f"Inverse-gamma parameters must be positive, got ({shape}, {scale})")
    return float(scale / rng.gamma(shape))


# =============================================================================
# FIELD SWEEP
# =============================================================================


def prior_precision(graph: NngpGraph, coeffs: BatchedCoeffs, tau2: float) -> np.ndarray:
    """Per-point prior conditional precision gamma_i of an NNGP field."""
    mask = graph.mask
    weights = np.where(mask, coeffs.b**2 / coeffs.f[:, None], 0.0)
    children = np.bincount(
        graph.neighbor_index[mask], weights=weights[mask], minlength=graph.n
    )
    return np.asarray((1.0 / coeffs.f + children) / tau2)


def _sweep_fields(
    centered: np.ndarray,
    design: np.ndarray,
    target: np.ndarray,
    sigma2: float,
    graph: NngpGraph,
    coeffs: Sequence[BatchedCoeffs],
    tau2: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Single-site update of K fields that share one graph.

    Point i's K-vector v_i is drawn from N(A^-1 (g_i e_i / sigma2 + m_i), A^-1)
    with A = g_i g_i^T / sigma2 + diag(gamma_i), where g_i = ``design[i]`` and
    e_i = ``target[i]`` is the likelihood residual net of the prior means.

    Args:
        centered: Current centered values, shape (K, n).
        design: Likelihood regressors, shape (n, K).
        target: Centered likelihood residuals, shape (n,).
        sigma2: Noise variance.
        graph: Shared graph.
        coeffs: Conditioning coefficients, one per field.
        tau2: Field scales, shape (K,).
        rng: Random stream.

    Returns:
        New centered values, shape (K, n).
    """
    k_fields, n = centered.shape
    v = np.array(centered, dtype=np.float64)
    b = np.stack([c.b for c in coeffs])
    cond_var = np.stack([c.f for c in coeffs]) * tau2[:, None]
    gamma = np.stack([prior_precision(graph, c, t) for c, t in zip(coeffs, tau2, strict=True)])
    resid = np.stack([field_residuals(v[k], graph, coeffs[k]) for k in range(k_fields)])
    z = rng.standard_normal((n, k_fields))

    for i in range(n):
        ch = graph.children[i]
        vi = v[:, i]
        m = (vi - resid[:, i]) / cond_var[:, i]
        if ch.size:
            bc = b[:, ch, graph.child_slot[i]]
            m = m + np.sum(bc * (resid[:, ch] + bc * vi[:, None]) / cond_var[:, ch], axis=1)

        g = design[i]
        if np.any(g != 0.0):
            precision = np.outer(g, g) / sigma2 + np.diag(gamma[:, i])
            chol = np.linalg.cholesky(precision)
            rhs = g * (target[i] / sigma2) + m
            new = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs) + z[i])
        else:
            new = m / gamma[:, i] + z[i] / np.sqrt(gamma[:, i])

        delta = new - vi
        v[:, i] = new
        resid[:, i] += delta
        if ch.size:
            resid[:, ch] -= bc * delta[:, None]
    return v


# =============================================================================
# GIBBS STEPS
# =============================================================================


def step_beta(
    state: LatentState,
    data: ObservedData,
    graph: NngpGraph,
    hyper: Hyperparams,
    priors: Priors,
    rng: np.random.Generator,
    *,
    coeffs: Sequence[BatchedCoeffs] | None = None,
) -> np.ndarray:
    """Draw the varying coefficients beta_0..beta_J jointly per point.

    Returns:
        New beta matrix, shape (n, J+1).
    """
    view = prior_view(priors)
    if coeffs is None:
        coeffs = [conditioning_arrays(graph, float(phi)) for phi in hyper.phi_beta]
    design = data.t[:, None] * np.column_stack([np.ones(data.n), state.f])
    target = data.y - state.mu - design @ view.bar_beta
    centered = (state.beta - view.bar_beta).T
    v = _sweep_fields(
        centered, design, target, hyper.sigma2, graph, coeffs, hyper.tau2_beta, rng
    )
    return np.asarray(v.T + view.bar_beta)


def step_mu(
    state: LatentState,
    data: ObservedData,
    graph_z: NngpGraph,
    hyper: Hyperparams,
    priors: Priors,
    rng: np.random.Generator,
    *,
    coeffs: BatchedCoeffs | None = None,
) -> np.ndarray:
    """Draw the prognostic field given the treatment part of the outcome."""
    view = prior_view(priors)
    if coeffs is None:
        coeffs = conditioning_arrays(graph_z, hyper.phi_mu)
    y_tilde = data.y - data.t * state.tau()
    v = _sweep_fields(
        (state.mu - view.bar_mu)[None, :],
        np.ones((data.n, 1)),
        y_tilde - view.bar_mu,
        hyper.sigma2,
        graph_z,
        [coeffs],
        np.array([hyper.tau2_mu]),
        rng,
    )
    return np.asarray(v[0] + view.bar_mu)


def step_f(
    state: LatentState,
    data: ObservedData,
    agents: Sequence[AgentPosterior],
    hyper: Hyperparams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw the latent agent factors, one agent at a time, vectorized over units.

    Untreated units get the agent prior N(a_ji, b_ji) since T_i = 0 removes the
    likelihood term.
    """
    a, b = agent_moments(agents)
    f = np.array(state.f, dtype=np.float64)
    beta = state.beta
    t = data.t
    base = data.y - state.mu - t * beta[:, 0]
    z = rng.standard_normal(f.shape)
    for j in range(f.shape[1]):
        coef = beta[:, j + 1]
        others = np.sum(beta[:, 1:] * f, axis=1) - coef * f[:, j]
        resid = base - t * others
        precision = t * coef**2 / hyper.sigma2 + 1.0 / b[:, j]
        linear = t * coef * resid / hyper.sigma2 + a[:, j] / b[:, j]
        f[:, j] = linear / precision + z[:, j] / np.sqrt(precision)
    return f


def _scale_draw(
    centered: np.ndarray,
    graph: NngpGraph,
    coeffs: BatchedCoeffs,
    prior: InverseGamma,
    rng: np.random.Generator,
) -> float:
    resid = field_residuals(centered, graph, coeffs)
    quad = float(np.sum(resid**2 / coeffs.f))
    return draw_inverse_gamma(prior.shape + 0.5 * graph.n, prior.scale + 0.5 * quad, rng)


def step_tau2_beta(
    state: LatentState,
    graph: NngpGraph,
    hyper: Hyperparams,
    priors: Priors,
    rng: np.random.Generator,
    *,
    coeffs: Sequence[BatchedCoeffs] | None = None,
) -> np.ndarray:
    """Draw each tau2_beta_j from IG((delta+n)/2, eta/2 + sum r^2/(2F))."""
    view = prior_view(priors)
    if coeffs is None:
        coeffs = [conditioning_arrays(graph, float(phi)) for phi in hyper.phi_beta]
    return np.array(
        [
            _scale_draw(state.beta[:, k] - view.bar_beta[k], graph, coeffs[k], view.ig_beta[k], rng)
            for k in range(state.beta.shape[1])
        ]
    )


def step_tau2_mu(
    state: LatentState,
    graph_z: NngpGraph,
    hyper: Hyperparams,
    priors: Priors,
    rng: np.random.Generator,
    *,
    coeffs: BatchedCoeffs | None = None,
) -> float:
    """Draw tau2_mu from its inverse-gamma full conditional."""
    view = prior_view(priors)
    if coeffs is None:
        coeffs = conditioning_arrays(graph_z, hyper.phi_mu)
    return _scale_draw(state.mu - view.bar_mu, graph_z, coeffs, view.ig_mu, rng)


def reflect_into(value: float, bounds: PhiBounds) -> float:
    """Fold ``value`` back into [lower, upper] by reflection at both ends."""
    width = bounds.width
    offset = (value - bounds.lower) % (2.0 * width)
    if offset > width:
        offset = 2.0 * width - offset
    return bounds.lower + offset


def _metropolis_phi(
    field: str,
    centered: np.ndarray,
    tau2: float,
    graph: NngpGraph,
    phi: float,
    bounds: PhiBounds,
    step_sd: float,
    cache: ConditioningCache,
    rng: np.random.Generator,
) -> tuple[float, bool]:
    proposal = reflect_into(phi + step_sd * rng.standard_normal(), bounds)
    u = rng.uniform()
    # Landing exactly on a bound leaves the open support.
    if not bounds.contains(proposal):
        return phi, False
    current = nngp_log_density(
        centered, 0.0, tau2, graph, phi, coeffs=cache.coefficients(field, graph, phi)
    )
    candidate = nngp_log_density(
        centered, 0.0, tau2, graph, proposal, coeffs=cache.coefficients(field, graph, proposal)
    )
    log_ratio = candidate - current
    if log_ratio >= 0.0 or u < math.exp(log_ratio):
        return proposal, True
    return phi, False


def step_phi(
    state: LatentState,
    graphs: FieldGraphs,
    hyper: Hyperparams,
    priors: Priors,
    settings: SamplerSettings,
    rng: np.random.Generator,
    *,
    cache: ConditioningCache | None = None,
) -> PhiUpdate:
    """One reflected random-walk Metropolis step per range parameter.

    The proposal sd is ``settings.phi_proposal_sd``, in distance units.
    Reflection keeps the proposal symmetric, so with a uniform prior the
    acceptance ratio is the NNGP density ratio alone.
    """
    view = prior_view(priors)
    cache = cache or ConditioningCache()
    phi_mu, accepted_mu = _metropolis_phi(
        FIELD_MU,
        state.mu - view.bar_mu,
        hyper.tau2_mu,
        graphs.mu,
        hyper.phi_mu,
        view.bounds_mu,
        settings.phi_proposal_sd,
        cache,
        rng,
    )
    phi_beta = np.empty(state.beta.shape[1])
    accepted_beta = np.zeros(state.beta.shape[1], dtype=bool)
    for k in range(state.beta.shape[1]):
        phi_beta[k], accepted_beta[k] = _metropolis_phi(
            beta_field(k),
            state.beta[:, k] - view.bar_beta[k],
            float(hyper.tau2_beta[k]),
            graphs.beta,
            float(hyper.phi_beta[k]),
            view.bounds_beta,
            settings.phi_proposal_sd,
            cache,
            rng,
        )
    return PhiUpdate(
        phi_mu=phi_mu, phi_beta=phi_beta, accepted_mu=accepted_mu, accepted_beta=accepted_beta
    )


def step_sigma2(
    state: LatentState,
    data: ObservedData,
    priors: Priors,
    rng: np.random.Generator,
) -> float:
    """Draw sigma2 from IG(delta/2 + n/2, eta/2 + sum (y~ - mu)^2 / 2)."""
    resid = data.y - data.t * state.tau() - state.mu
    prior = priors.ig_sigma
    return draw_inverse_gamma(
        prior.shape + 0.5 * data.n, prior.scale + 0.5 * float(np.sum(resid**2)), rng
    )


# =============================================================================
# SWEEP AND LOG JOINT
# =============================================================================


def gibbs_sweep(
    iteration: int,
    latent: LatentState,
    hyper: Hyperparams,
    data: ObservedData,
    agents: Sequence[AgentPosterior],
    graphs: FieldGraphs,
    priors: Priors,
    settings: SamplerSettings,
    rng: np.random.Generator,
    cache: ConditioningCache,
) -> SweepResult:
    """Run one systematic-scan sweep.

    Raises:
        SamplerError: Tagged with ``iteration`` and the failing step name.
    """
    step = "beta"
    try:
        coeffs_beta = [
            cache.coefficients(beta_field(k), graphs.beta, float(phi))
            for k, phi in enumerate(hyper.phi_beta)
        ]
        beta = step_beta(latent, data, graphs.beta, hyper, priors, rng, coeffs=coeffs_beta)
        latent = LatentState(mu=latent.mu, beta=beta, f=latent.f)

        step = "mu"
        coeffs_mu = cache.coefficients(FIELD_MU, graphs.mu, hyper.phi_mu)
        mu = step_mu(latent, data, graphs.mu, hyper, priors, rng, coeffs=coeffs_mu)
        latent = LatentState(mu=mu, beta=latent.beta, f=latent.f)

        step = "f"
        f = step_f(latent, data, agents, hyper, rng)
        latent = LatentState(mu=latent.mu, beta=latent.beta, f=f)

        step = "tau2_beta"
        tau2_beta = step_tau2_beta(latent, graphs.beta, hyper, priors, rng, coeffs=coeffs_beta)

        step = "tau2_mu"
        tau2_mu = step_tau2_mu(latent, graphs.mu, hyper, priors, rng, coeffs=coeffs_mu)
        hyper = hyper.model_copy(update={"tau2_beta": tau2_beta, "tau2_mu": tau2_mu})

        step = "phi"
        phi = step_phi(latent, graphs, hyper, priors, settings, rng, cache=cache)
        hyper = hyper.model_copy(update={"phi_mu": phi.phi_mu, "phi_beta": phi.phi_beta})

        step = "sigma2"
        sigma2 = step_sigma2(latent, data, priors, rng)
        hyper = Hyperparams(
            sigma2=sigma2,
            tau2_mu=hyper.tau2_mu,
            tau2_beta=hyper.tau2_beta,
            phi_mu=hyper.phi_mu,
            phi_beta=hyper.phi_beta,
        )
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
        raise SamplerError(
            f"Gibbs step '{step}' failed: {e}", iteration=iteration, step=step
        ) from e
    return SweepResult(latent=latent, hyper=hyper, phi=phi)


def _ig_logpdf(value: float, prior: InverseGamma) -> float:
    return float(stats.invgamma.logpdf(value, a=prior.shape, scale=prior.scale))


def log_joint(
    latent: LatentState,
    hyper: Hyperparams,
    data: ObservedData,
    agents: Sequence[AgentPosterior],
    graphs: FieldGraphs,
    priors: Priors,
    cache: ConditioningCache | None = None,
) -> float:
    """Log joint density of data, latent fields, factors and hyperparameters."""
    view = prior_view(priors)
    cache = cache or ConditioningCache()
    resid = data.y - latent.mu - data.t * latent.tau()
    total = float(np.sum(stats.norm.logpdf(resid, scale=math.sqrt(hyper.sigma2))))

    total += nngp_log_density(
        latent.mu,
        view.bar_mu,
        hyper.tau2_mu,
        graphs.mu,
        hyper.phi_mu,
        coeffs=cache.coefficients(FIELD_MU, graphs.mu, hyper.phi_mu),
    )
    for k, phi in enumerate(hyper.phi_beta):
        total += nngp_log_density(
            latent.beta[:, k],
            float(view.bar_beta[k]),
            float(hyper.tau2_beta[k]),
            graphs.beta,
            float(phi),
            coeffs=cache.coefficients(beta_field(k), graphs.beta, float(phi)),
        )

    a, b = agent_moments(agents)
    total += float(np.sum(stats.norm.logpdf(latent.f, loc=a, scale=np.sqrt(b))))

    total += _ig_logpdf(hyper.sigma2, view.ig_sigma) + _ig_logpdf(hyper.tau2_mu, view.ig_mu)
    for k, value in enumerate(hyper.tau2_beta):
        total += _ig_logpdf(float(value), view.ig_beta[k])
    total -= math.log(view.bounds_mu.width)
    total -= hyper.phi_beta.shape[0] * math.log(view.bounds_beta.width)
    return total


# =============================================================================
# CHAIN
# =============================================================================


def build_field_graphs(data: ObservedData, settings: SamplerSettings) -> FieldGraphs:
    """Build the coefficient graph on X (or its selected columns) and the
    prognostic graph on (X, pi).

    Raises:
        DataValidationError: If no coefficient covariates are available or a
            selected column does not exist.
    """
    if data.pi is None:
        raise ValueError("Propensities must be attached before building graphs")
    columns = (
        list(range(data.p)) if settings.beta_columns is None else list(settings.beta_columns)
    )
    bad = [c for c in columns if not 0 <= c < data.p]
    if bad:
        raise DataValidationError(
            "Coefficient columns out of range", [f"column {c} not in 0..{data.p - 1}" for c in bad]
        )
    if not columns:
        raise DataValidationError(
            "No covariates for the coefficient fields",
            ["at least one covariate column is required"],
        )
    points_x = data.x[:, columns]
    points_z = np.column_stack([data.x, data.pi])
    return FieldGraphs(
        beta=build_graph(points_x, settings.m),
        mu=build_graph(points_z, settings.m),
        beta_columns=tuple(columns),
    )


def resolve_priors(
    priors: Priors, data: ObservedData, n_agents: int, graphs: FieldGraphs
) -> Priors:
    """Fill the data-dependent prior defaults.

    Raises:
        ConfigError: If a user-supplied vector has the wrong length.
    """
    control = data.y[data.t == 0.0]
    try:
        return priors.resolve(
            n_agents,
            control_mean=float(control.mean()) if control.size else float(data.y.mean()),
            max_distance_x=max_pairwise_distance(graphs.beta.points),
            max_distance_z=max_pairwise_distance(graphs.mu.points),
        )
    except ValueError as e:
        raise ConfigError(f"Invalid prior specification: {e}") from e


def initial_state(
    data: ObservedData, agents: Sequence[AgentPosterior], priors: Priors
) -> tuple[LatentState, Hyperparams]:
    """Starting point: prior means for fields and variances, agent means for f,
    bound midpoints for ranges."""
    view = prior_view(priors)
    n, n_fields = data.n, len(agents) + 1
    a, _ = agent_moments(agents)
    latent = LatentState(
        mu=np.full(n, view.bar_mu),
        beta=np.tile(view.bar_beta, (n, 1)),
        f=a,
    )
    hyper = Hyperparams(
        sigma2=view.ig_sigma.initial_value(),
        tau2_mu=view.ig_mu.initial_value(),
        tau2_beta=[prior.initial_value() for prior in view.ig_beta],
        phi_mu=view.bounds_mu.midpoint,
        phi_beta=np.full(n_fields, view.bounds_beta.midpoint),
    )
    return latent, hyper


def sample_chain(
    data: ObservedData,
    agents: Sequence[AgentPosterior],
    priors: Priors,
    settings: SamplerSettings,
) -> ChainResult:
    """Validate inputs, build graphs and run the Gibbs sampler.

    Propensities are estimated first when ``data.pi`` is absent; supplied
    values are clipped to [0.01, 0.99].

    Raises:
        DataValidationError: If the data or agents violate their invariants.
        SamplerError: If a Gibbs step fails.
    """
    require_valid(data, agents)
    data = resolve_propensity(data)
    graphs = build_field_graphs(data, settings)
    priors = resolve_priors(priors, data, len(agents), graphs)

    rng = spawn_rng(settings.seed)
    cache = ConditioningCache()
    latent, hyper = initial_state(data, agents, priors)

    n, n_fields = data.n, len(agents) + 1
    retained = settings.n_retained
    store = {
        "mu": np.empty((retained, n)),
        "beta": np.empty((retained, n, n_fields)),
        "f": np.empty((retained, n, n_fields - 1)),
        "sigma2": np.empty(retained),
        "tau2_mu": np.empty(retained),
        "tau2_beta": np.empty((retained, n_fields)),
        "phi_mu": np.empty(retained),
        "phi_beta": np.empty((retained, n_fields)),
    }
    accepted_mu = 0
    accepted_beta = np.zeros(n_fields)
    trace: list[float] = []

    logger.info(
        "Starting chain",
        extra={"n": n, "agents": n_fields - 1, "n_iter": settings.n_iter, "m": settings.m},
    )
    slot = 0
    for iteration in range(settings.n_iter):
        sweep = gibbs_sweep(
            iteration, latent, hyper, data, agents, graphs, priors, settings, rng, cache
        )
        latent, hyper = sweep.latent, sweep.hyper
        accepted_mu += int(sweep.phi.accepted_mu)
        accepted_beta += sweep.phi.accepted_beta
        trace.append(log_joint(latent, hyper, data, agents, graphs, priors, cache))

        if settings.keeps(iteration):
            store["mu"][slot] = latent.mu
            store["beta"][slot] = latent.beta
            store["f"][slot] = latent.f
            store["sigma2"][slot] = hyper.sigma2
            store["tau2_mu"][slot] = hyper.tau2_mu
            store["tau2_beta"][slot] = hyper.tau2_beta
            store["phi_mu"][slot] = hyper.phi_mu
            store["phi_beta"][slot] = hyper.phi_beta
            slot += 1

        if (iteration + 1) % settings.log_every == 0:
            logger.debug(
                "Chain progress",
                extra={
                    "iteration": iteration + 1,
                    "sigma2": hyper.sigma2,
                    "accept_phi_mu": accepted_mu / (iteration + 1),
                    "log_joint": trace[-1],
                },
            )

    draws = PosteriorDraws.from_arrays(**store)
    diagnostics = ChainDiagnostics(
        phi_accept_rate_mu=accepted_mu / settings.n_iter,
        phi_accept_rate_beta=[float(r) for r in accepted_beta / settings.n_iter],
        ess=chain_ess(draws),
        log_joint=trace,
        n_retained=draws.n_draws,
    )
    logger.info(
        "Chain finished",
        extra={"retained": draws.n_draws, "accept_phi_mu": diagnostics.phi_accept_rate_mu},
    )
    return ChainResult(
        draws=draws, diagnostics=diagnostics, priors=priors, graphs=graphs, data=data
    )


def run_chain(
    data: ObservedData,
    agents: Sequence[AgentPosterior],
    priors: Priors,
    settings: SamplerSettings,
) -> tuple[PosteriorDraws, ChainDiagnostics]:
    """Run the sampler and return the retained draws with their diagnostics."""
    result = sample_chain(data, agents, priors, settings)
    return result.draws, result.diagnostics


def chain_ess(draws: PosteriorDraws) -> dict[str, float]:
    """Effective sample sizes of the monitored scalars."""
    ess = {
        "sigma2": effective_sample_size(draws.sigma2),
        "tau2_mu": effective_sample_size(draws.tau2_mu),
        "phi_mu": effective_sample_size(draws.phi_mu),
        "mean_tau": effective_sample_size(draws.tau.mean(axis=1)),
    }
    for k in range(draws.tau2_beta.shape[1]):
        ess[f"tau2_{beta_field(k)}"] = effective_sample_size(draws.tau2_beta[:, k])
        ess[f"phi_{beta_field(k)}"] = effective_sample_size(draws.phi_beta[:, k])
    return ess
