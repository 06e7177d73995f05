"""Pydantic models for causalsynth.

This module contains the data models shared across the package. All models
use Pydantic BaseModel with Field() descriptions for documentation and
validation.

Models are organized by domain:
- Array-backed core types (ObservedData, AgentPosterior, LatentState,
  Hyperparams, PosteriorDraws)
- Prior and sampler settings (InverseGamma, PhiBounds, Priors, SamplerSettings)
- Encoding and validation reports
- Agent and project configuration
- Simulation configs and evaluation reports

Array-backed models are frozen and store read-only float arrays, so they can be
shared between threads and processes without defensive copies. Type invariants
that involve several fields (aligned lengths, binary treatments) are listed by
``problems()`` and enforced by ``causalsynth.data.validate_dataset``.
"""

from __future__ import annotations

from collections.abc import Iterator
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from causalsynth.constants import (
    AM_BOOTSTRAP_REPS,
    AM_GCV_CYCLES,
    AM_MAX_KNOTS,
    DEFAULT_IG_SCALE,
    DEFAULT_IG_SHAPE,
    DEFAULT_LOG_EVERY,
    DEFAULT_N_BURN,
    DEFAULT_N_ITER,
    DEFAULT_NEIGHBORS,
    DEFAULT_PHI_PROPOSAL_SD,
    DEFAULT_SEED,
    DEFAULT_THIN,
    KNN_SUBSAMPLE_REPS,
    ORACLE_NOISE_SD,
    PHI_LOWER_FRACTION,
    PHI_UPPER_FRACTION,
    SE_FLOOR,
)

_ARRAY_CONFIG = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def frozen_array(value: Any, ndim: int | None = None) -> np.ndarray:
    """Copy ``value`` into a read-only float64 array.

    Args:
        value: Anything ``np.array`` accepts.
        ndim: Required dimensionality; a 1-d input is promoted to a column
            when ``ndim == 2``.

    Returns:
        A new array with the writeable flag cleared.
    """
    arr = np.array(value, dtype=np.float64, copy=True)
    if ndim == 2 and arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


# =============================================================================
# CORE DATA TYPES
# =============================================================================


class ObservedData(BaseModel):
    """Outcomes, binary treatments, encoded covariates and optional propensities."""

    model_config = _ARRAY_CONFIG

    y: np.ndarray = Field(..., description="Outcome vector, length n")
    t: np.ndarray = Field(..., description="Treatment indicator vector (0/1), length n")
    x: np.ndarray = Field(..., description="Encoded covariate matrix, n x p")
    pi: np.ndarray | None = Field(default=None, description="Propensity scores in (0, 1)")
    covariate_names: list[str] = Field(
        default_factory=list,
        description="Names of the encoded covariate columns",
    )

    @field_validator("y", "t", mode="before")
    @classmethod
    def _vector(cls, value: Any) -> np.ndarray:
        return frozen_array(value, ndim=1)

    @field_validator("x", mode="before")
    @classmethod
    def _matrix(cls, value: Any) -> np.ndarray:
        return frozen_array(value, ndim=2)

    @field_validator("pi", mode="before")
    @classmethod
    def _optional_vector(cls, value: Any) -> np.ndarray | None:
        return None if value is None else frozen_array(value, ndim=1)

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    @property
    def treated(self) -> np.ndarray:
        """Boolean mask of treated units."""
        return np.asarray(self.t == 1.0)

    def with_pi(self, pi: np.ndarray) -> ObservedData:
        """Return a copy carrying the given propensity scores."""
        return self.model_copy(update={"pi": frozen_array(pi, ndim=1)})

    def problems(self) -> list[str]:
        """List violated invariants; an empty list means the data is valid."""
        errors: list[str] = []
        n = self.y.shape[0]
        if n < 2:
            errors.append(f"at least 2 rows required, got {n}")
        if self.t.shape[0] != n:
            errors.append(f"length mismatch: t has {self.t.shape[0]} rows, y has {n}")
        if self.x.shape[0] != n:
            errors.append(f"length mismatch: x has {self.x.shape[0]} rows, y has {n}")
        if not np.all(np.isfinite(self.y)):
            errors.append("non-finite outcome values")
        if not np.all(np.isfinite(self.x)):
            errors.append("non-finite covariate values")
        if not np.all(np.isin(self.t, (0.0, 1.0))):
            errors.append("treatment must be binary (0/1)")
        elif self.t.size and (np.all(self.t == 1.0) or np.all(self.t == 0.0)):
            errors.append("both treatment arms required")
        if self.pi is not None:
            if self.pi.shape[0] != n:
                errors.append(f"length mismatch: pi has {self.pi.shape[0]} rows, y has {n}")
            if not np.all((self.pi > 0.0) & (self.pi < 1.0)):
                errors.append("propensity scores must lie strictly inside (0, 1)")
        if self.covariate_names and len(self.covariate_names) != self.x.shape[1]:
            errors.append("covariate_names does not match the number of x columns")
        return errors


class AgentPosterior(BaseModel):
    """Pointwise normal approximation N(tau_hat, se^2) produced by one estimator."""

    model_config = _ARRAY_CONFIG

    j: int = Field(..., ge=1, description="Estimator index (1-based)")
    name: str = Field(default="", description="Agent name, e.g. 'lm'")
    tau_hat: np.ndarray = Field(..., description="Pointwise effect estimates")
    se: np.ndarray = Field(..., description="Pointwise standard errors, all > 0")

    @field_validator("tau_hat", "se", mode="before")
    @classmethod
    def _vector(cls, value: Any) -> np.ndarray:
        return frozen_array(value, ndim=1)

    @property
    def variance(self) -> np.ndarray:
        """Agent prior variance b_ji = se^2."""
        return np.square(self.se)

    @property
    def label(self) -> str:
        return self.name or f"agent{self.j}"

    def problems(self, n: int | None = None) -> list[str]:
        """List violated invariants, optionally checking alignment with ``n`` rows."""
        errors: list[str] = []
        if self.tau_hat.shape != self.se.shape:
            errors.append(
                f"{self.label}: tau_hat and se lengths differ "
                f"({self.tau_hat.shape[0]} vs {self.se.shape[0]})"
            )
        if n is not None and self.tau_hat.shape[0] != n:
            errors.append(f"{self.label}: {self.tau_hat.shape[0]} rows, data has {n}")
        if not np.all(np.isfinite(self.tau_hat)):
            errors.append(f"{self.label}: non-finite tau_hat values")
        if not np.all(self.se >= SE_FLOOR):
            errors.append(f"{self.label}: nonpositive standard error (below {SE_FLOOR:g})")
        return errors


class LatentState(BaseModel):
    """Gibbs values of mu_i, beta_ji and f_ji for every unit."""

    model_config = _ARRAY_CONFIG

    mu: np.ndarray = Field(..., description="Prognostic term, length n")
    beta: np.ndarray = Field(..., description="Varying coefficients, n x (J+1)")
    f: np.ndarray = Field(..., description="Latent agent factors, n x J")

    @field_validator("mu", mode="before")
    @classmethod
    def _vector(cls, value: Any) -> np.ndarray:
        return frozen_array(value, ndim=1)

    @field_validator("beta", "f", mode="before")
    @classmethod
    def _matrix(cls, value: Any) -> np.ndarray:
        return frozen_array(value, ndim=2)

    @model_validator(mode="after")
    def _check_shapes(self) -> LatentState:
        n = self.mu.shape[0]
        if self.beta.shape[0] != n or self.f.shape[0] != n:
            raise ValueError("mu, beta and f must have the same number of rows")
        if self.beta.shape[1] != self.f.shape[1] + 1:
            raise ValueError("beta must have exactly one more column than f")
        return self

    @property
    def n_agents(self) -> int:
        return int(self.f.shape[1])

    def tau(self) -> np.ndarray:
        """Treatment effect beta_0 + sum_j beta_j f_j for every unit."""
        return synthesize_tau(self.beta, self.f)


class Hyperparams(BaseModel):
    """Noise variance, field scales and range parameters."""

    model_config = _ARRAY_CONFIG

    sigma2: float = Field(..., gt=0.0, description="Observation noise variance")
    tau2_mu: float = Field(..., gt=0.0, description="Scale of the prognostic field")
    tau2_beta: np.ndarray = Field(..., description="Scales of beta_0..beta_J")
    phi_mu: float = Field(..., gt=0.0, description="Range of the prognostic field")
    phi_beta: np.ndarray = Field(..., description="Ranges of beta_0..beta_J")

    @field_validator("tau2_beta", "phi_beta", mode="before")
    @classmethod
    def _vector(cls, value: Any) -> np.ndarray:
        arr = frozen_array(value, ndim=1)
        if not np.all(arr > 0.0):
            raise ValueError("scales and ranges must be strictly positive")
        return arr


def synthesize_tau(beta: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Combine coefficients and factors along the last axis: beta_0 + sum_j beta_j f_j."""
    return np.asarray(beta[..., 0] + np.sum(beta[..., 1:] * f, axis=-1))


class PosteriorDraws(BaseModel):
    """Retained chain states stored as stacked arrays (draw index first)."""

    model_config = _ARRAY_CONFIG

    mu: np.ndarray = Field(..., description="draws x n")
    beta: np.ndarray = Field(..., description="draws x n x (J+1)")
    f: np.ndarray = Field(..., description="draws x n x J")
    sigma2: np.ndarray = Field(..., description="draws")
    tau2_mu: np.ndarray = Field(..., description="draws")
    tau2_beta: np.ndarray = Field(..., description="draws x (J+1)")
    phi_mu: np.ndarray = Field(..., description="draws")
    phi_beta: np.ndarray = Field(..., description="draws x (J+1)")
    tau: np.ndarray = Field(..., description="draws x n, treatment effect per draw")

    @field_validator("*", mode="before")
    @classmethod
    def _array(cls, value: Any) -> np.ndarray:
        return frozen_array(value)

    @classmethod
    def from_arrays(cls, **arrays: np.ndarray) -> PosteriorDraws:
        """Build draws and derive ``tau`` from the stored beta and f draws."""
        tau = synthesize_tau(arrays["beta"], arrays["f"])
        return cls(tau=tau, **arrays)

    @property
    def n_draws(self) -> int:
        return int(self.sigma2.shape[0])

    @property
    def n_agents(self) -> int:
        return int(self.f.shape[2])

    def state(self, d: int) -> tuple[LatentState, Hyperparams]:
        """Reconstruct the d-th retained (LatentState, Hyperparams) pair."""
        latent = LatentState(mu=self.mu[d], beta=self.beta[d], f=self.f[d])
        hyper = Hyperparams(
            sigma2=float(self.sigma2[d]),
            tau2_mu=float(self.tau2_mu[d]),
            tau2_beta=self.tau2_beta[d],
            phi_mu=float(self.phi_mu[d]),
            phi_beta=self.phi_beta[d],
        )
        return latent, hyper

    def states(self) -> Iterator[tuple[LatentState, Hyperparams]]:
        for d in range(self.n_draws):
            yield self.state(d)

    def arrays(self) -> dict[str, np.ndarray]:
        """Stored arrays by field name (used for persistence)."""
        return {name: getattr(self, name) for name in type(self).model_fields}


# =============================================================================
# PRIORS AND SAMPLER SETTINGS
# =============================================================================


class InverseGamma(BaseModel):
    """Inverse-gamma prior IG(delta/2, eta/2)."""

    model_config = ConfigDict(frozen=True)

    delta: float = Field(default=DEFAULT_IG_SHAPE, gt=0.0, description="Shape parameter delta")
    eta: float = Field(default=DEFAULT_IG_SCALE, gt=0.0, description="Scale parameter eta")

    @property
    def shape(self) -> float:
        return self.delta / 2.0

    @property
    def scale(self) -> float:
        return self.eta / 2.0

    def initial_value(self) -> float:
        """Prior mean eta/(delta-2) when it exists, else 1."""
        if self.delta > 2.0:
            return self.eta / (self.delta - 2.0)
        return 1.0


class PhiBounds(BaseModel):
    """Support (lower, upper) of a uniform prior on a range parameter."""

    model_config = ConfigDict(frozen=True)

    lower: float = Field(..., gt=0.0, description="Lower bound c_lower")
    upper: float = Field(..., gt=0.0, description="Upper bound c_upper")

    @model_validator(mode="after")
    def _ordered(self) -> PhiBounds:
        if not self.lower < self.upper:
            raise ValueError(f"phi bounds must satisfy 0 < lower < upper, got {self}")
        return self

    @classmethod
    def from_max_distance(cls, max_distance: float) -> PhiBounds:
        """Default bounds (0.05 D, 2 D) for maximum pairwise distance D."""
        d = max_distance if max_distance > 0.0 else 1.0
        return cls(lower=PHI_LOWER_FRACTION * d, upper=PHI_UPPER_FRACTION * d)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, value: float) -> bool:
        return self.lower < value < self.upper


class Priors(BaseModel):
    """Prior specification; fields left unset are resolved from the data.

    ``resolve`` fills the data-dependent defaults: equal-weight bar_beta,
    control-arm mean for bar_mu and distance-based range bounds.
    """

    model_config = ConfigDict(frozen=True)

    bar_beta: list[float] | None = Field(
        default=None,
        description="Prior means of beta_0..beta_J; default (0, 1/J, ..., 1/J)",
    )
    bar_mu: float | None = Field(
        default=None,
        description="Prior mean of mu; default is the control-arm mean outcome",
    )
    ig_sigma: InverseGamma = Field(default_factory=InverseGamma)
    ig_mu: InverseGamma = Field(default_factory=InverseGamma)
    ig_beta: list[InverseGamma] | None = Field(
        default=None,
        description="One prior per beta field; default is IG(1, 1/2) for each",
    )
    phi_bounds_mu: PhiBounds | None = Field(default=None, description="Range prior for mu")
    phi_bounds_beta: PhiBounds | None = Field(default=None, description="Range prior for beta")

    @property
    def is_resolved(self) -> bool:
        return None not in (
            self.bar_beta,
            self.bar_mu,
            self.ig_beta,
            self.phi_bounds_mu,
            self.phi_bounds_beta,
        )

    def resolve(
        self,
        n_agents: int,
        *,
        control_mean: float,
        max_distance_x: float,
        max_distance_z: float,
    ) -> Priors:
        """Fill unset fields for ``n_agents`` agents and check vector lengths."""
        bar_beta = self.bar_beta
        if bar_beta is None:
            bar_beta = [0.0] + [1.0 / n_agents] * n_agents
        if len(bar_beta) != n_agents + 1:
            raise ValueError(f"bar_beta needs {n_agents + 1} entries, got {len(bar_beta)}")
        ig_beta = self.ig_beta
        if ig_beta is None:
            ig_beta = [InverseGamma() for _ in range(n_agents + 1)]
        if len(ig_beta) != n_agents + 1:
            raise ValueError(f"ig_beta needs {n_agents + 1} entries, got {len(ig_beta)}")
        return self.model_copy(
            update={
                "bar_beta": [float(b) for b in bar_beta],
                "bar_mu": control_mean if self.bar_mu is None else self.bar_mu,
                "ig_beta": list(ig_beta),
                "phi_bounds_mu": self.phi_bounds_mu
                or PhiBounds.from_max_distance(max_distance_z),
                "phi_bounds_beta": self.phi_bounds_beta
                or PhiBounds.from_max_distance(max_distance_x),
            }
        )


class SamplerSettings(BaseModel):
    """MCMC run settings."""

    model_config = ConfigDict(frozen=True)

    m: int = Field(default=DEFAULT_NEIGHBORS, ge=1, description="Neighbor count")
    n_iter: int = Field(default=DEFAULT_N_ITER, ge=1, description="Total sweeps")
    n_burn: int = Field(default=DEFAULT_N_BURN, ge=0, description="Discarded sweeps")
    thin: int = Field(default=DEFAULT_THIN, ge=1, description="Thinning stride")
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64, description="RNG seed")
    phi_proposal_sd: float = Field(
        default=DEFAULT_PHI_PROPOSAL_SD,
        gt=0.0,
        description="Random-walk sd for range parameters, in covariate distance units",
    )
    beta_columns: list[int] | None = Field(
        default=None,
        description="Encoded covariate columns the beta fields depend on (default: all)",
    )
    log_every: int = Field(default=DEFAULT_LOG_EVERY, ge=1, description="Progress log stride")

    @model_validator(mode="after")
    def _burn_before_end(self) -> SamplerSettings:
        if self.n_burn >= self.n_iter:
            raise ValueError(f"n_burn ({self.n_burn}) must be smaller than n_iter ({self.n_iter})")
        return self

    @property
    def n_retained(self) -> int:
        return len(range(self.n_burn, self.n_iter, self.thin))

    def keeps(self, iteration: int) -> bool:
        """Whether the state after sweep ``iteration`` (0-based) is retained."""
        return iteration >= self.n_burn and (iteration - self.n_burn) % self.thin == 0


class ChainDiagnostics(BaseModel):
    """Acceptance rates, effective sample sizes and the log joint trace of one chain."""

    phi_accept_rate_mu: float = Field(..., ge=0.0, le=1.0)
    phi_accept_rate_beta: list[float] = Field(..., description="One rate per beta field")
    ess: dict[str, float] = Field(
        default_factory=dict,
        description="Effective sample size per monitored scalar",
    )
    log_joint: list[float] = Field(
        default_factory=list,
        description="Log joint density after every sweep",
    )
    n_retained: int = Field(..., ge=0)

    @field_validator("phi_accept_rate_beta")
    @classmethod
    def _rates(cls, value: list[float]) -> list[float]:
        if any(not 0.0 <= r <= 1.0 for r in value):
            raise ValueError("acceptance rates must lie in [0, 1]")
        return value


class PropensityModel(BaseModel):
    """Logistic regression of T on [1, X]."""

    coefficients: list[float] = Field(..., description="Intercept first, then one per column")
    converged: bool = Field(..., description="Whether the gradient tolerance was reached")
    iterations: int = Field(..., ge=0)
    gradient_norm: float = Field(..., ge=0.0)

    def predict(self, x: np.ndarray, *, clip: tuple[float, float]) -> np.ndarray:
        design = np.column_stack([np.ones(x.shape[0]), x])
        eta = design @ np.asarray(self.coefficients)
        return np.clip(1.0 / (1.0 + np.exp(-eta)), clip[0], clip[1])


# =============================================================================
# ENCODING AND VALIDATION REPORTS
# =============================================================================

ColumnKind = Literal["continuous", "binary", "categorical"]


class ColumnTransform(BaseModel):
    """How one raw column maps to encoded columns."""

    model_config = ConfigDict(frozen=True)

    name: str
    kind: ColumnKind
    mean: float | None = Field(default=None, description="Centering for continuous columns")
    sd: float | None = Field(default=None, description="Population sd for continuous columns")
    levels: list[str] | None = Field(
        default=None,
        description="Categorical levels in order; the first is the dropped reference",
    )
    outputs: list[str] = Field(default_factory=list, description="Encoded column names")


class EncodingReport(BaseModel):
    """Per-column transforms, sufficient to re-encode new rows identically."""

    model_config = ConfigDict(frozen=True)

    columns: list[ColumnTransform] = Field(default_factory=list)

    @property
    def input_names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def encoded_names(self) -> list[str]:
        return [name for c in self.columns for name in c.outputs]


class ValidationReport(BaseModel):
    """Summary of a dataset check."""

    n: int
    p: int
    n_agents: int = Field(..., alias="J")
    treated_fraction: float
    errors: list[str] = Field(default_factory=list)

    model_config = ConfigDict(populate_by_name=True)

    @property
    def ok(self) -> bool:
        return not self.errors


# =============================================================================
# AGENT AND PROJECT CONFIGURATION
# =============================================================================


class LinearAgentConfig(BaseModel):
    """OLS agent on [1, X, T, T*X]."""

    enabled: bool = Field(default=True, description="Whether the agent is fitted")


class AdditiveAgentConfig(BaseModel):
    """Penalized additive model with bootstrap standard errors."""

    enabled: bool = Field(default=True, description="Whether the agent is fitted")
    bootstrap_reps: int = Field(
        default=AM_BOOTSTRAP_REPS,
        ge=0,
        description="Exponential-weight bootstrap replications for se",
    )
    max_knots: int = Field(default=AM_MAX_KNOTS, ge=1, description="Knots per spline smoother")
    gcv_cycles: int = Field(
        default=AM_GCV_CYCLES,
        ge=1,
        description="Backfitting cycles during which smoothing parameters are chosen by GCV",
    )


class KnnAgentConfig(BaseModel):
    """Nearest-neighbor T-learner."""

    enabled: bool = Field(default=True, description="Whether the agent is fitted")
    k: int | None = Field(default=None, ge=1, description="Neighbors per arm; default ceil(n^0.6)")
    subsample_reps: int = Field(
        default=KNN_SUBSAMPLE_REPS,
        ge=2,
        description="Half-sample replications for se",
    )


class OracleAgentConfig(BaseModel):
    """Truth-plus-noise agent, only usable where the true effect is known."""

    noise_sd: float = Field(default=ORACLE_NOISE_SD, gt=0.0, description="Noise sd and se")


class ExternalAgentConfig(BaseModel):
    """Estimates read from a plug-in CSV file."""

    path: str = Field(..., description="CSV with tau_hat_j, se_j columns")
    column: int = Field(default=1, ge=1, description="Which j to read from the file")


class AgentsConfig(BaseModel):
    """Configuration for all built-in agents."""

    lm: LinearAgentConfig = Field(default_factory=LinearAgentConfig)
    am: AdditiveAgentConfig = Field(default_factory=AdditiveAgentConfig)
    knn: KnnAgentConfig = Field(default_factory=KnnAgentConfig)
    oracle: OracleAgentConfig = Field(default_factory=OracleAgentConfig)

    def for_agent(self, name: str) -> BaseModel:
        config = getattr(self, name, None)
        if not isinstance(config, BaseModel):
            raise KeyError(f"No configuration section for agent '{name}'")
        return config


class DataConfig(BaseModel):
    """How raw CSV columns are interpreted."""

    categorical: list[str] = Field(
        default_factory=list,
        description="Columns forced to categorical (otherwise inferred)",
    )
    beta_columns: list[str] | None = Field(
        default=None,
        description="Raw covariates the varying coefficients depend on (default: all)",
    )
    pi_column: str | None = Field(default=None, description="Column holding known propensities")


class RuntimeConfig(BaseModel):
    """Process-level settings."""

    workers: int | None = Field(
        default=None,
        ge=1,
        description="Worker processes for replications (default from env or 1)",
    )


class CausalSynthConfig(BaseModel):
    """Root configuration read from .causalsynth.yaml."""

    sampler: SamplerSettings = Field(default_factory=SamplerSettings)
    priors: Priors = Field(default_factory=Priors)
    agents: AgentsConfig = Field(default_factory=AgentsConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)


# =============================================================================
# SIMULATION MODELS
# =============================================================================

_SCENARIO_FORMS: dict[int, tuple[Literal["A", "B"], Literal["A", "B"]]] = {
    1: ("A", "A"),
    2: ("B", "A"),
    3: ("A", "B"),
    4: ("B", "B"),
}


class ScenarioConfig(BaseModel):
    """One simulation study: data-generating process, roster and run settings."""

    name: str = Field(default="scenario", description="Label used in reports")
    scenario: int | None = Field(
        default=None,
        ge=1,
        le=4,
        description="Shorthand for (mu_form, tau_form): 1=AA, 2=BA, 3=AB, 4=BB",
    )
    mu_form: Literal["A", "B"] = Field(default="A", description="Prognostic surface")
    tau_form: Literal["A", "B"] = Field(default="A", description="Treatment effect surface")
    n: int = Field(default=300, ge=10, description="Training sample size")
    p: int = Field(default=5, ge=5, description="Covariate dimension")
    sigma2: float = Field(default=1.0, gt=0.0, description="Noise variance")
    n_test: int | None = Field(default=None, ge=1, description="Test sample size")
    evaluation: Literal["in_sample", "test"] = Field(
        default="in_sample",
        description="Evaluate on training points or on a fresh test set",
    )
    replications: int = Field(default=20, ge=1, description="Monte Carlo replications")
    seed: int = Field(default=DEFAULT_SEED, ge=0, description="Base seed")
    roster: list[str] = Field(
        default_factory=lambda: ["lm", "am", "knn"],
        min_length=1,
        description="Agents fitted and synthesized in every replicate",
    )
    include_bcs: bool = Field(default=True, description="Whether to run the synthesis model")
    known_propensity: bool = Field(
        default=True,
        description="Give the sampler the design propensity 1/2 instead of estimating it",
    )
    sampler: SamplerSettings = Field(default_factory=SamplerSettings)
    priors: Priors = Field(default_factory=Priors)
    agents: AgentsConfig = Field(default_factory=AgentsConfig)
    workers: int | None = Field(default=None, ge=1, description="Worker processes")

    @model_validator(mode="before")
    @classmethod
    def _expand_scenario(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("scenario") in _SCENARIO_FORMS:
            mu_form, tau_form = _SCENARIO_FORMS[data["scenario"]]
            data = {"mu_form": mu_form, "tau_form": tau_form, **data}
        return data

    @model_validator(mode="after")
    def _test_set(self) -> ScenarioConfig:
        if self.evaluation == "test" and self.n_test is None:
            raise ValueError("evaluation 'test' requires n_test")
        return self


class EvalRow(BaseModel):
    """Metrics of one method on one evaluation set."""

    method: str
    mse: float = Field(..., ge=0.0)
    cp: float | None = Field(default=None, ge=0.0, le=100.0, description="Coverage in percent")
    al: float | None = Field(default=None, ge=0.0, description="Average interval length")
    n: int = Field(..., ge=1)


class MethodSummary(BaseModel):
    """Metrics of one method averaged over replications."""

    method: str
    mse: float = Field(..., ge=0.0, description="Mean MSE over replications")
    rmse: float = Field(..., ge=0.0, description="Square root of the pooled MSE")
    cp: float | None = Field(default=None, ge=0.0, le=100.0)
    al: float | None = Field(default=None, ge=0.0)
    replications: int = Field(..., ge=0)


class ReplicateResult(BaseModel):
    """Outcome of one replicate: metric rows or the error that stopped it."""

    replicate: int
    rows: list[EvalRow] = Field(default_factory=list)
    error: str | None = None


class EvalReport(BaseModel):
    """Aggregated simulation report."""

    name: str
    methods: list[MethodSummary] = Field(default_factory=list)
    replications: int = Field(..., ge=0, description="Replications requested")
    completed: int = Field(..., ge=0, description="Replications that finished")
    failures: list[ReplicateResult] = Field(default_factory=list)
    replicates: list[ReplicateResult] = Field(default_factory=list)
    wall_clock_seconds: float = Field(default=0.0, ge=0.0)

    @property
    def complete(self) -> bool:
        return self.completed == self.replications

    def method(self, name: str) -> MethodSummary:
        for summary in self.methods:
            if summary.method == name:
                return summary
        raise KeyError(name)
