"""Nearest-neighbor Gaussian process machinery.

A field v over n points gets the sparse joint density

    p(v) = prod_i N(v*_i ; b_i . v*_N(i), tau2 * f_i),    v* = v - mean

where N(i) holds up to m nearest predecessors of i in a fixed ordering and
(b_i, f_i) are the regression weights and residual variance fraction of v*_i
on v*_N(i) under the exponential correlation exp(-d / phi).

Points are ordered by the sum of their standardized coordinates (ties by
index). Distances to and among neighbors are computed once per graph; a
change of phi only rescales the kernel.

Example:
    graph = build_graph(x, m=15)
    coeffs = conditioning_arrays(graph, phi=0.8)
    logp = nngp_log_density(beta, 0.0, 1.0, graph, 0.8, coeffs=coeffs)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from causalsynth.constants import CORRELATION_JITTER
from causalsynth.exceptions import FactorizationError, NngpError
from causalsynth.logging import get_logger
from causalsynth.utils import standardize_columns

logger = get_logger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)


# =============================================================================
# KERNEL
# =============================================================================


def correlation(d: float | np.ndarray, phi: float) -> float | np.ndarray:
    """Exponential correlation exp(-d / phi).

    Raises:
        NngpError: If ``phi`` is not positive or a distance is negative.
    """
    if not phi > 0.0:
        raise NngpError(f"Range parameter must be positive, got {phi}", {"phi": phi})
    if np.any(np.asarray(d) < 0.0):
        raise NngpError("Distances must be nonnegative")
    if np.ndim(d) == 0:
        return math.exp(-float(d) / phi)
    return np.exp(-np.asarray(d, dtype=np.float64) / phi)


# =============================================================================
# GRAPH
# =============================================================================


@dataclass(frozen=True, eq=False)
class NngpGraph:
    """Ordering, neighbor sets, children relation and cached distances.

    Padded arrays hold up to ``width = min(m, n-1)`` neighbors per point;
    ``neighbor_index`` is -1 past ``neighbor_count[i]`` and the distance
    arrays are 0 there.
    """

    points: np.ndarray
    m: int
    order: np.ndarray
    rank: np.ndarray
    neighbors: tuple[np.ndarray, ...]
    children: tuple[np.ndarray, ...]
    child_slot: tuple[np.ndarray, ...]
    neighbor_index: np.ndarray
    neighbor_count: np.ndarray
    neighbor_dist: np.ndarray
    pair_dist: np.ndarray

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def width(self) -> int:
        return int(self.neighbor_index.shape[1])

    @property
    def mask(self) -> np.ndarray:
        """Boolean (n, width) mask of real neighbor slots."""
        return np.arange(self.width)[None, :] < self.neighbor_count[:, None]

    def gather(self, values: np.ndarray) -> np.ndarray:
        """Neighbor values as an (n, width) array, 0 in padded slots."""
        safe = np.where(self.neighbor_index >= 0, self.neighbor_index, 0)
        return np.where(self.mask, values[safe], 0.0)


def build_graph(points: np.ndarray, m: int) -> NngpGraph:
    """Build the ordered m-nearest-predecessor graph of ``points``.

    Args:
        points: Array of shape (n, d) (a 1-d array is treated as one column).
        m: Maximum neighbors per point.

    Raises:
        NngpError: On empty input or m < 1.
    """
    pts = np.array(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n < 1:
        raise NngpError("Cannot build a graph on an empty point set")
    if m < 1:
        raise NngpError(f"Neighbor count must be at least 1, got {m}", {"m": m})
    pts.flags.writeable = False

    width = min(m, n - 1)
    key = standardize_columns(pts).sum(axis=1)
    index = np.arange(n)
    order = np.lexsort((index, key))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = index

    neighbor_index = np.full((n, width), -1, dtype=np.int64)
    neighbor_count = np.zeros(n, dtype=np.int64)
    neighbor_dist = np.zeros((n, width))
    pair_dist = np.zeros((n, width, width))
    neighbors: list[np.ndarray] = [np.empty(0, dtype=np.int64) for _ in range(n)]

    for r in range(1, n):
        i = order[r]
        pred = order[:r]
        dist = np.sqrt(np.sum((pts[pred] - pts[i]) ** 2, axis=1))
        chosen = np.lexsort((pred, dist))[:width]
        nb = pred[chosen]
        k = nb.shape[0]
        neighbors[i] = nb
        neighbor_index[i, :k] = nb
        neighbor_count[i] = k
        neighbor_dist[i, :k] = dist[chosen]
        pair_dist[i, :k, :k] = cdist(pts[nb], pts[nb])

    child_lists: list[list[int]] = [[] for _ in range(n)]
    slot_lists: list[list[int]] = [[] for _ in range(n)]
    for t in range(n):
        for slot, i in enumerate(neighbors[t]):
            child_lists[int(i)].append(t)
            slot_lists[int(i)].append(slot)

    for arr in (order, rank, neighbor_index, neighbor_count, neighbor_dist, pair_dist):
        arr.flags.writeable = False

    logger.debug("Built NNGP graph", extra={"n": n, "m": m, "dims": pts.shape[1]})
    return NngpGraph(
        points=pts,
        m=m,
        order=order,
        rank=rank,
        neighbors=tuple(neighbors),
        children=tuple(np.asarray(c, dtype=np.int64) for c in child_lists),
        child_slot=tuple(np.asarray(s, dtype=np.int64) for s in slot_lists),
        neighbor_index=neighbor_index,
        neighbor_count=neighbor_count,
        neighbor_dist=neighbor_dist,
        pair_dist=pair_dist,
    )


# =============================================================================
# CONDITIONING
# =============================================================================


@dataclass(frozen=True, eq=False)
class ConditioningCoeffs:
    """Regression weights ``b`` on N(i) and residual variance fraction ``f``."""

    b: np.ndarray
    f: float


@dataclass(frozen=True, eq=False)
class BatchedCoeffs:
    """Conditioning coefficients of every point for one phi.

    ``b`` has shape (n, width) with zeros in padded slots; ``f`` has shape (n,).
    """

    phi: float
    b: np.ndarray
    f: np.ndarray


def _neighbor_system(
    graph: NngpGraph, points: np.ndarray | slice, phi: float
) -> tuple[np.ndarray, np.ndarray]:
    """Jittered neighbor correlation matrices and cross-correlation vectors."""
    mask = graph.mask[points]
    pair_mask = mask[..., :, None] & mask[..., None, :]
    cov = np.where(pair_mask, np.exp(-graph.pair_dist[points] / phi), 0.0)
    diag = np.arange(graph.width)
    cov[..., diag, diag] = 1.0 + CORRELATION_JITTER
    cross = np.where(mask, np.exp(-graph.neighbor_dist[points] / phi), 0.0)
    return cov, cross


def conditioning(i: int, graph: NngpGraph, phi: float) -> ConditioningCoeffs:
    """Conditioning coefficients of point ``i`` on its neighbor set.

    b = c_iN C_NN^-1 and f = 1 - c_iN C_NN^-1 c_Ni, with 1e-10 added to the
    diagonal of C_NN.

    Raises:
        NngpError: If ``phi`` is not positive.
        FactorizationError: If C_NN is singular even after jitter.
    """
    if not phi > 0.0:
        raise NngpError(f"Range parameter must be positive, got {phi}", {"phi": phi})
    k = int(graph.neighbor_count[i])
    if k == 0:
        return ConditioningCoeffs(b=np.empty(0), f=1.0)

    cov, cross = _neighbor_system(graph, slice(i, i + 1), phi)
    cov, cross = cov[0, :k, :k], cross[0, :k]
    try:
        b = np.linalg.solve(cov, cross)
    except np.linalg.LinAlgError as e:
        raise FactorizationError(
            f"Neighbor correlation matrix of point {i} is singular", point=i, details={"phi": phi}
        ) from e
    f = 1.0 - float(cross @ b)
    if not (np.all(np.isfinite(b)) and 0.0 < f <= 1.0 + 1e-12):
        raise FactorizationError(
            f"Conditioning of point {i} is numerically degenerate",
            point=i,
            details={"phi": phi, "f": f},
        )
    return ConditioningCoeffs(b=b, f=min(f, 1.0))


def conditioning_arrays(graph: NngpGraph, phi: float) -> BatchedCoeffs:
    """Conditioning coefficients for every point at once.

    Raises:
        FactorizationError: Naming the first point whose system is degenerate.
    """
    if not phi > 0.0:
        raise NngpError(f"Range parameter must be positive, got {phi}", {"phi": phi})
    n, width = graph.n, graph.width
    if width == 0:
        return BatchedCoeffs(phi=phi, b=np.zeros((n, 0)), f=np.ones(n))

    cov, cross = _neighbor_system(graph, slice(None), phi)
    try:
        b = np.linalg.solve(cov, cross[..., None])[..., 0]
    except np.linalg.LinAlgError:
        b = np.full((n, width), np.nan)
    f = 1.0 - np.sum(cross * b, axis=1)

    bad = ~(np.all(np.isfinite(b), axis=1) & (f > 0.0))
    if np.any(bad):
        # Re-run the failing points one by one so the error names the point.
        for i in np.flatnonzero(bad):
            conditioning(int(i), graph, phi)
        raise FactorizationError(
            "Neighbor correlation matrix is degenerate", point=int(np.flatnonzero(bad)[0])
        )
    return BatchedCoeffs(phi=phi, b=b, f=np.minimum(f, 1.0))


# =============================================================================
# DENSITY
# =============================================================================


def field_residuals(centered: np.ndarray, graph: NngpGraph, coeffs: BatchedCoeffs) -> np.ndarray:
    """Residuals v*_i - b_i . v*_N(i) for a centered field."""
    return np.asarray(centered - np.sum(coeffs.b * graph.gather(centered), axis=1))


def nngp_log_density(
    values: np.ndarray,
    mean: float,
    tau2: float,
    graph: NngpGraph,
    phi: float,
    *,
    coeffs: BatchedCoeffs | None = None,
) -> float:
    """Sum over points of log N(v*_i ; b_i . v*_N(i), tau2 f_i).

    Args:
        values: Field values, length n.
        mean: Constant prior mean subtracted before conditioning.
        tau2: Field scale.
        graph: Graph the field lives on.
        phi: Range parameter.
        coeffs: Precomputed coefficients for ``phi``.

    Raises:
        NngpError: If ``tau2`` is not positive.
    """
    if not tau2 > 0.0:
        raise NngpError(f"Field scale must be positive, got {tau2}", {"tau2": tau2})
    if coeffs is None or coeffs.phi != phi:
        coeffs = conditioning_arrays(graph, phi)
    resid = field_residuals(np.asarray(values, dtype=np.float64) - mean, graph, coeffs)
    var = tau2 * coeffs.f
    return float(-0.5 * np.sum(_LOG_2PI + np.log(var) + resid**2 / var))


def sample_field(
    graph: NngpGraph,
    phi: float,
    tau2: float,
    mean: float,
    rng: np.random.Generator,
    *,
    coeffs: BatchedCoeffs | None = None,
) -> np.ndarray:
    """Draw a field from the NNGP prior by sequential conditioning in graph order."""
    if coeffs is None or coeffs.phi != phi:
        coeffs = conditioning_arrays(graph, phi)
    z = rng.standard_normal(graph.n)
    centered = np.zeros(graph.n)
    for i in graph.order:
        k = graph.neighbor_count[i]
        pred = float(coeffs.b[i, :k] @ centered[graph.neighbor_index[i, :k]]) if k else 0.0
        centered[i] = pred + math.sqrt(tau2 * coeffs.f[i]) * z[i]
    return centered + mean
