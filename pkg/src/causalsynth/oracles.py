"""Correctness checks run by ``causalsynth validate``.

Three independent checks:

- dense equivalence: with every predecessor as a neighbor, the sparse NNGP
  density equals the dense Gaussian density of the exponential covariance;
- conditioning: training and prediction conditioning coefficients match the
  Schur complement of a dense correlation matrix;
- joint distribution: the Gibbs sampler leaves the joint law of parameters
  and data invariant (see ``causalsynth.geweke``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats
from scipy.spatial.distance import cdist, pdist

from causalsynth.constants import (
    CORRELATION_JITTER,
    GEWEKE_DRAWS,
    GEWEKE_NEIGHBORS,
    GEWEKE_Z_THRESHOLD,
)
from causalsynth.geweke import geweke_priors, geweke_test
from causalsynth.logging import get_logger
from causalsynth.models import SamplerSettings
from causalsynth.nngp import build_graph, conditioning, nngp_log_density
from causalsynth.predict import prediction_coefficients, prediction_neighbors
from causalsynth.utils import spawn_rng

logger = get_logger(__name__)

DENSE_SETS = 25
DENSE_POINTS = 20
DENSE_DIMS = (1, 3, 5)
DENSE_TOLERANCE = 1e-6  # absolute, in log-density units

SCHUR_CONFIGS = 1000
SCHUR_MAX_NEIGHBORS = 5
SCHUR_TOLERANCE = 1e-10
SCHUR_MIN_SEPARATION = 0.02


@dataclass(frozen=True)
class OracleResult:
    """Outcome of one check."""

    name: str
    passed: bool
    statistic: float
    threshold: float
    detail: str = ""


def _dense_covariance(points: np.ndarray, phi: float, tau2: float) -> np.ndarray:
    cov = np.exp(-cdist(points, points) / phi)
    cov[np.diag_indices_from(cov)] += CORRELATION_JITTER
    return tau2 * cov


def dense_equivalence_check(
    *,
    seed: int = 0,
    n_sets: int = DENSE_SETS,
    n: int = DENSE_POINTS,
    dims: tuple[int, ...] = DENSE_DIMS,
) -> OracleResult:
    """Compare the full-neighbor NNGP log density with the dense one.

    Point set ``s`` has ``dims[s % len(dims)]`` coordinates; the statistic is
    the largest absolute log-density gap over all sets.
    """
    worst = 0.0
    detail = ""
    for s in range(n_sets):
        rng = spawn_rng(seed, 10, s)
        points = rng.uniform(0.0, 1.0, (n, dims[s % len(dims)]))
        phi = float(rng.uniform(0.2, 1.0))
        tau2 = float(rng.uniform(0.5, 2.0))
        mean = float(rng.normal())
        graph = build_graph(points, n - 1)
        cov = _dense_covariance(points, phi, tau2)
        values = mean + linalg.cholesky(cov, lower=True) @ rng.standard_normal(n)

        sparse = nngp_log_density(values, mean, tau2, graph, phi)
        dense = float(stats.multivariate_normal(np.full(n, mean), cov).logpdf(values))
        gap = abs(sparse - dense)
        if gap >= worst:
            worst = gap
            detail = f"set={s} sparse={sparse:.10g} dense={dense:.10g}"
    return OracleResult(
        name="dense_equivalence",
        passed=worst < DENSE_TOLERANCE,
        statistic=worst,
        threshold=DENSE_TOLERANCE,
        detail=detail,
    )


def _schur(cov: np.ndarray, cross: np.ndarray) -> tuple[np.ndarray, float]:
    b = linalg.solve(cov, cross, assume_a="pos")
    return b, 1.0 - float(cross @ b)


def _separated_points(rng: np.random.Generator, n: int, dims: int) -> np.ndarray:
    """Uniform points in the unit cube, redrawn until no pair is nearly coincident."""
    while True:
        points = rng.uniform(0.0, 1.0, (n, dims))
        if n < 2 or float(np.min(pdist(points))) >= SCHUR_MIN_SEPARATION:
            return points


def conditioning_check(
    *,
    seed: int = 0,
    n_configs: int = SCHUR_CONFIGS,
    max_neighbors: int = SCHUR_MAX_NEIGHBORS,
) -> OracleResult:
    """Compare training and prediction coefficients with dense Schur complements.

    Each configuration draws a dimension, a neighbor count up to
    ``max_neighbors``, a point set and a range. The last point in the graph
    order has every other point as a neighbor, and a fresh location is
    conditioned on the same points through the prediction path.
    """
    worst = 0.0
    for c in range(n_configs):
        rng = spawn_rng(seed, 11, c)
        dims = int(rng.integers(1, 6))
        k = int(rng.integers(1, max_neighbors + 1))
        points = _separated_points(rng, k + 1, dims)
        phi = float(rng.uniform(0.1, 1.0))

        graph = build_graph(points, max_neighbors)
        i = int(graph.order[-1])
        nb = graph.neighbors[i]
        cov = np.exp(-cdist(points[nb], points[nb]) / phi) + CORRELATION_JITTER * np.eye(k)
        cross = np.exp(-np.linalg.norm(points[nb] - points[i], axis=1) / phi)
        b_ref, f_ref = _schur(cov, cross)
        coeffs = conditioning(i, graph, phi)
        worst = max(worst, float(np.max(np.abs(coeffs.b - b_ref))), abs(coeffs.f - f_ref))

        x0 = rng.uniform(0.0, 1.0, dims)
        idx, dist, pair = prediction_neighbors(x0, points, k)
        cov = np.exp(-pair / phi) + CORRELATION_JITTER * np.eye(idx.shape[0])
        b_ref, f_ref = _schur(cov, np.exp(-dist / phi))
        b, f = prediction_coefficients(dist, pair, np.asarray(phi))
        worst = max(worst, float(np.max(np.abs(b - b_ref))), abs(float(f) - f_ref))

    return OracleResult(
        name="schur_conditioning",
        passed=worst < SCHUR_TOLERANCE,
        statistic=worst,
        threshold=SCHUR_TOLERANCE,
        detail=f"configurations={n_configs}",
    )


def joint_distribution_check(*, seed: int = 0, n_draws: int = GEWEKE_DRAWS) -> OracleResult:
    """Geweke test of the full Gibbs sweep."""
    result = geweke_test(
        geweke_priors(), SamplerSettings(m=GEWEKE_NEIGHBORS), n_draws=n_draws, seed=seed
    )
    return OracleResult(
        name="geweke",
        passed=result.passed(GEWEKE_Z_THRESHOLD),
        statistic=result.max_abs_z,
        threshold=GEWEKE_Z_THRESHOLD,
        detail=f"worst={result.worst}",
    )


def run_oracle_suite(*, seed: int = 0, geweke_draws: int = GEWEKE_DRAWS) -> list[OracleResult]:
    """Run every check and log a line per result."""
    results = [
        dense_equivalence_check(seed=seed),
        conditioning_check(seed=seed),
        joint_distribution_check(seed=seed, n_draws=geweke_draws),
    ]
    for result in results:
        logger.info(
            "Oracle check finished",
            extra={"check": result.name, "passed": result.passed, "statistic": result.statistic},
        )
    return results
