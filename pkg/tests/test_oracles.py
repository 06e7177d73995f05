"""Tests for the correctness checks behind `causalsynth validate`."""

from __future__ import annotations

import pytest

from causalsynth.exceptions import CausalSynthError
from causalsynth.oracles import (
    conditioning_check,
    dense_equivalence_check,
    joint_distribution_check,
    run_oracle_suite,
)


class TestDeterministicChecks:
    """Checks with exact references."""

    @pytest.mark.parametrize("seed", [0, 1])
    def test_dense_equivalence(self, seed):
        """25 point sets of 20 points in 1, 3 and 5 dimensions."""
        result = dense_equivalence_check(seed=seed)
        assert result.passed, result.detail
        assert result.statistic < 1e-6

    def test_dense_gap_is_absolute(self):
        result = dense_equivalence_check(seed=4, n_sets=3)
        assert result.threshold == 1e-6
        assert result.detail.startswith("set=")

    @pytest.mark.parametrize("seed", [0, 3])
    def test_conditioning(self, seed):
        """1000 configurations with up to five neighbors."""
        result = conditioning_check(seed=seed)
        assert result.passed, result.statistic
        assert result.statistic < 1e-10
        assert result.detail == "configurations=1000"


class TestJointDistribution:
    """The Geweke check as wired into the suite."""

    def test_rejects_tiny_runs(self):
        with pytest.raises(CausalSynthError):
            joint_distribution_check(n_draws=50)

    @pytest.mark.slow
    def test_suite_passes(self):
        results = run_oracle_suite(seed=0)
        assert [r.name for r in results] == ["dense_equivalence", "schur_conditioning", "geweke"]
        assert all(r.passed for r in results), results
