"""Bounded cache of NNGP conditioning coefficients.

The sampler evaluates (B, F) for the current range parameter of every field
and for each Metropolis proposal. Entries are keyed by (field name, phi) so an
accepted proposal is already cached when it becomes the current value.

Example:
    cache = ConditioningCache(max_size=64)
    coeffs = cache.coefficients("beta0", graph, phi)  # computed
    coeffs = cache.coefficients("beta0", graph, phi)  # cached
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from causalsynth.constants import DEFAULT_COEFF_CACHE_SIZE
from causalsynth.nngp import BatchedCoeffs, conditioning_arrays

if TYPE_CHECKING:
    from causalsynth.nngp import NngpGraph

CacheKey = tuple[str, float]


class ConditioningCache:
    """In-memory cache of batched conditioning coefficients.

    Insertion-ordered dict; when full, the oldest entry is evicted.

    Attributes:
        _cache: The underlying cache dictionary.
        _max_size: Maximum number of entries.
        hits: Lookups answered from the cache.
        misses: Lookups that had to compute coefficients.
    """

    def __init__(self, max_size: int = DEFAULT_COEFF_CACHE_SIZE) -> None:
        """Initialize the cache.

        Args:
            max_size: Maximum number of (field, phi) entries. Default 64.
        """
        if max_size < 1:
            raise ValueError(f"max_size must be at least 1, got {max_size}")
        self._cache: dict[CacheKey, BatchedCoeffs] = {}
        self._max_size = max_size
        self.hits = 0
        self.misses = 0

    def get(self, field: str, phi: float) -> BatchedCoeffs | None:
        """Cached coefficients for ``field`` at ``phi``, or None."""
        return self._cache.get((field, phi))

    def set(self, field: str, phi: float, coeffs: BatchedCoeffs) -> None:
        """Store coefficients, evicting the oldest entry when at capacity."""
        key = (field, phi)
        if len(self._cache) >= self._max_size and key not in self._cache:
            oldest_key = next(iter(self._cache))
            del self._cache[oldest_key]
        self._cache[key] = coeffs

    def coefficients(self, field: str, graph: NngpGraph, phi: float) -> BatchedCoeffs:
        """Return cached coefficients or compute and store them."""
        coeffs = self.get(field, phi)
        if coeffs is not None:
            self.hits += 1
            return coeffs
        self.misses += 1
        coeffs = conditioning_arrays(graph, phi)
        self.set(field, phi, coeffs)
        return coeffs

    def invalidate(self, field: str) -> None:
        """Drop every entry of one field."""
        for key in [k for k in self._cache if k[0] == field]:
            del self._cache[key]

    def clear(self) -> None:
        """Clear all cache entries."""
        self._cache.clear()

    def __len__(self) -> int:
        return len(self._cache)
