"""Shared numerical helpers.

Random streams are derived from a base seed plus integer keys through
``numpy.random.SeedSequence``, so every replicate, bootstrap replication
or prediction point owns an independent, reproducible generator.
"""

from __future__ import annotations

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist

from causalsynth.constants import INTERVAL_LEVEL


def spawn_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *keys)``.

    Example:
        rng = spawn_rng(cfg.seed, replicate)
    """
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def child_seed(rng: np.random.Generator) -> int:
    """Draw a 63-bit seed from ``rng`` for a downstream component."""
    return int(rng.integers(0, 2**63 - 1))


def max_pairwise_distance(points: np.ndarray) -> float:
    """Largest Euclidean distance between two rows (0 for fewer than two rows)."""
    if points.shape[0] < 2:
        return 0.0
    return float(np.max(pdist(points)))


def standardize_columns(points: np.ndarray) -> np.ndarray:
    """Center columns and divide by their population sd (constant columns stay at 0)."""
    centered = points - points.mean(axis=0)
    sd = points.std(axis=0)
    return centered / np.where(sd > 0.0, sd, 1.0)


def summarize_draws(draws: np.ndarray, level: float = INTERVAL_LEVEL) -> pd.DataFrame:
    """Posterior mean, sd and equal-tailed interval per column of ``draws``.

    Args:
        draws: Array of shape (n_draws, n_points).
        level: Interval coverage.

    Returns:
        Frame with columns mean, sd, lo95, hi95, width (one row per point).
    """
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws, [alpha, 1.0 - alpha], axis=0)
    return pd.DataFrame(
        {
            "mean": draws.mean(axis=0),
            "sd": draws.std(axis=0, ddof=1) if draws.shape[0] > 1 else np.zeros(draws.shape[1]),
            "lo95": lo,
            "hi95": hi,
            "width": hi - lo,
        }
    )


def effective_sample_size(chain: np.ndarray) -> float:
    """ESS of a scalar chain via Geyer's initial positive sequence.

    Returns the chain length for constant chains and never exceeds it.
    """
    x = np.asarray(chain, dtype=np.float64)
    n = x.shape[0]
    if n < 4:
        return float(n)
    x = x - x.mean()
    variance = float(np.dot(x, x)) / n
    if variance <= 0.0:
        return float(n)

    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(x, size)
    acov = np.fft.irfft(spectrum * np.conjugate(spectrum), size)[:n] / n
    rho = acov / acov[0]

    # Sum consecutive pairs while they stay positive.
    total = 0.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0.0:
            break
        total += pair
    tau = max(2.0 * total - 1.0, 1.0)
    return float(min(n / tau, n))
