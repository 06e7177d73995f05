"""Tests for the NNGP kernel, graph, conditioning and density."""

from __future__ import annotations

import inspect

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import linalg, stats
from scipy.spatial.distance import cdist

from causalsynth.constants import CORRELATION_JITTER
from causalsynth.exceptions import NngpError
from causalsynth.nngp import (
    build_graph,
    conditioning,
    conditioning_arrays,
    correlation,
    nngp_log_density,
    sample_field,
)


def dense_correlation(points: np.ndarray, phi: float) -> np.ndarray:
    return np.exp(-cdist(points, points) / phi) + CORRELATION_JITTER * np.eye(points.shape[0])


class TestCorrelation:
    """Tests for the exponential kernel."""

    def test_one_at_zero_distance(self):
        assert correlation(0.0, 0.7) == 1.0

    @given(
        st.floats(0.0, 50.0),
        st.floats(0.0, 50.0),
        st.floats(0.01, 10.0),
    )
    def test_non_increasing_in_distance(self, d1, d2, phi):
        near, far = sorted((d1, d2))
        assert correlation(far, phi) <= correlation(near, phi)

    @given(st.floats(0.01, 10.0), st.floats(0.01, 10.0))
    def test_bounded_by_one(self, d, phi):
        assert 0.0 <= correlation(d, phi) <= 1.0

    def test_vectorized(self):
        np.testing.assert_allclose(correlation(np.array([0.0, 1.0]), 1.0), [1.0, np.exp(-1.0)])

    @pytest.mark.parametrize("phi", [0.0, -1.0])
    def test_nonpositive_range_rejected(self, phi):
        with pytest.raises(NngpError):
            correlation(1.0, phi)

    def test_negative_distance_rejected(self):
        with pytest.raises(NngpError):
            correlation(-0.1, 1.0)


class TestBuildGraph:
    """Tests for ordering and neighbor selection."""

    def test_neighbors_are_earlier_points(self):
        """Every neighbor precedes its point in the ordering."""
        points = np.random.default_rng(0).standard_normal((30, 2))
        graph = build_graph(points, 4)
        for i in range(graph.n):
            assert np.all(graph.rank[graph.neighbors[i]] < graph.rank[i])

    def test_neighbor_counts(self):
        """The r-th point in the ordering has min(m, r) neighbors."""
        points = np.random.default_rng(1).standard_normal((12, 3))
        graph = build_graph(points, 5)
        for r, i in enumerate(graph.order):
            assert graph.neighbor_count[i] == min(5, r)
        assert graph.width == 5

    def test_neighbors_are_nearest_predecessors(self):
        points = np.random.default_rng(2).standard_normal((25, 2))
        graph = build_graph(points, 3)
        for r in range(1, graph.n):
            i = graph.order[r]
            pred = graph.order[:r]
            dist = np.linalg.norm(points[pred] - points[i], axis=1)
            expected = np.sort(dist)[: min(3, r)]
            np.testing.assert_allclose(np.sort(graph.neighbor_dist[i, : len(expected)]), expected)

    def test_ordering_by_coordinate_sum(self):
        """Points are ordered by the sum of standardized coordinates."""
        points = np.array([[2.0, 2.0], [0.0, 0.0], [1.0, 1.0]])
        graph = build_graph(points, 2)
        np.testing.assert_array_equal(graph.order, [1, 2, 0])

    def test_ties_broken_by_index(self):
        points = np.zeros((4, 2))
        graph = build_graph(points, 2)
        np.testing.assert_array_equal(graph.order, [0, 1, 2, 3])
        np.testing.assert_array_equal(graph.neighbors[3], [0, 1])

    @given(st.integers(2, 25), st.integers(1, 6), st.integers(0, 1000))
    def test_children_transpose_neighbors(self, n, m, seed):
        """t is a child of i exactly when i is a neighbor of t, at the recorded slot."""
        points = np.random.default_rng(seed).standard_normal((n, 2))
        graph = build_graph(points, m)
        pairs_from_neighbors = {
            (int(i), t) for t in range(n) for i in graph.neighbors[t]
        }
        pairs_from_children = {
            (i, int(t)) for i in range(n) for t in graph.children[i]
        }
        assert pairs_from_neighbors == pairs_from_children
        for i in range(n):
            for t, slot in zip(graph.children[i], graph.child_slot[i], strict=True):
                assert graph.neighbor_index[t, slot] == i

    def test_deterministic(self):
        points = np.random.default_rng(3).standard_normal((20, 2))
        first, second = build_graph(points, 4), build_graph(points.copy(), 4)
        np.testing.assert_array_equal(first.neighbor_index, second.neighbor_index)
        np.testing.assert_array_equal(first.order, second.order)

    def test_tied_grid_needs_no_seed(self):
        """A grid full of equal coordinate sums still orders the same way every call."""
        assert "seed" not in inspect.signature(build_graph).parameters
        grid = np.array([[i, j] for i in range(5) for j in range(5)], dtype=np.float64)
        graphs = [build_graph(grid, 6) for _ in range(3)]
        for other in graphs[1:]:
            np.testing.assert_array_equal(other.order, graphs[0].order)
            for mine, theirs in zip(other.neighbors, graphs[0].neighbors, strict=True):
                np.testing.assert_array_equal(mine, theirs)

    def test_single_point(self):
        graph = build_graph(np.array([[1.0, 2.0]]), 3)
        assert graph.width == 0
        assert graph.neighbor_count[0] == 0

    def test_invalid_arguments(self):
        with pytest.raises(NngpError):
            build_graph(np.empty((0, 2)), 3)
        with pytest.raises(NngpError):
            build_graph(np.zeros((3, 2)), 0)


class TestConditioning:
    """Tests for conditioning coefficients."""

    def test_matches_dense_schur_complement(self):
        points = np.random.default_rng(4).uniform(size=(15, 2))
        graph = build_graph(points, 4)
        phi = 0.5
        for i in range(graph.n):
            nb = graph.neighbors[i]
            coeffs = conditioning(i, graph, phi)
            if nb.size == 0:
                assert coeffs.f == 1.0
                continue
            cov = dense_correlation(points[nb], phi)
            cross = np.exp(-np.linalg.norm(points[nb] - points[i], axis=1) / phi)
            b = linalg.solve(cov, cross)
            np.testing.assert_allclose(coeffs.b, b, atol=1e-10)
            assert coeffs.f == pytest.approx(1.0 - cross @ b, abs=1e-10)

    def test_variance_fraction_in_unit_interval(self):
        points = np.random.default_rng(5).standard_normal((40, 3))
        coeffs = conditioning_arrays(build_graph(points, 6), 1.3)
        assert np.all(coeffs.f > 0.0)
        assert np.all(coeffs.f <= 1.0)

    def test_batched_equals_pointwise(self):
        points = np.random.default_rng(6).standard_normal((20, 2))
        graph = build_graph(points, 3)
        batched = conditioning_arrays(graph, 0.9)
        for i in range(graph.n):
            single = conditioning(i, graph, 0.9)
            k = graph.neighbor_count[i]
            np.testing.assert_allclose(batched.b[i, :k], single.b, atol=1e-12)
            assert batched.f[i] == pytest.approx(single.f)


class TestDensity:
    """Tests for nngp_log_density and sample_field."""

    @pytest.mark.parametrize("dims", [1, 3, 5])
    def test_full_neighbor_sets_equal_dense_density(self, dims):
        rng = np.random.default_rng(7 + dims)
        points = rng.uniform(size=(20, dims))
        phi, tau2, mean = 0.4, 2.0, -0.5
        cov = tau2 * dense_correlation(points, phi)
        values = rng.multivariate_normal(np.full(20, mean), cov)

        sparse = nngp_log_density(values, mean, tau2, build_graph(points, 19), phi)
        dense = stats.multivariate_normal(np.full(20, mean), cov).logpdf(values)
        assert abs(sparse - dense) < 1e-6

    def test_nonpositive_scale_rejected(self):
        graph = build_graph(np.array([[0.0], [1.0]]), 1)
        with pytest.raises(NngpError):
            nngp_log_density(np.zeros(2), 0.0, 0.0, graph, 1.0)

    def test_sampled_field_covariance(self):
        """Three points with full conditioning sets reproduce the dense covariance."""
        points = np.array([[0.0], [0.3], [1.0]])
        graph = build_graph(points, 2)
        rng = np.random.default_rng(8)
        draws = np.stack([sample_field(graph, 0.5, 1.5, 2.0, rng) for _ in range(6000)])
        np.testing.assert_allclose(draws.mean(axis=0), 2.0, atol=0.08)
        np.testing.assert_allclose(
            np.cov(draws.T), 1.5 * dense_correlation(points, 0.5), atol=0.12
        )
