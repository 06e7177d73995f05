"""Tests for chain directory persistence."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from causalsynth.constants import CHAIN_MANIFEST_NAME
from causalsynth.exceptions import ChainStoreError
from causalsynth.models import ColumnTransform, EncodingReport, SamplerSettings
from causalsynth.storage import ChainStore

SETTINGS = SamplerSettings(m=5, n_iter=50, n_burn=10, seed=5)


@pytest.fixture
def encoding() -> EncodingReport:
    return EncodingReport(
        columns=[
            ColumnTransform(name=name, kind="continuous", mean=0.0, sd=1.0, outputs=[name])
            for name in ("x1", "x2")
        ]
    )


@pytest.fixture
def saved(tmp_path: Path, quick_chain, encoding) -> ChainStore:
    store = ChainStore(tmp_path / "chain")
    store.save(quick_chain, encoding=encoding, settings=SETTINGS, agent_names=["lm", "knn"])
    return store


class TestChainStore:
    """Tests for ChainStore save and load."""

    def test_round_trip(self, saved, quick_chain, encoding):
        stored = saved.load()
        for name, array in quick_chain.draws.arrays().items():
            np.testing.assert_array_equal(getattr(stored.chain.draws, name), array)
        np.testing.assert_array_equal(stored.chain.data.x, quick_chain.data.x)
        np.testing.assert_array_equal(stored.chain.data.pi, quick_chain.data.pi)
        assert stored.chain.priors == quick_chain.priors
        assert stored.settings == SETTINGS
        assert stored.encoding == encoding
        assert stored.agent_names == ["lm", "knn"]
        assert stored.chain.diagnostics.n_retained == quick_chain.diagnostics.n_retained

    def test_graphs_rebuilt_identically(self, saved, quick_chain):
        graphs = saved.load().chain.graphs
        np.testing.assert_array_equal(
            graphs.beta.neighbor_index, quick_chain.graphs.beta.neighbor_index
        )
        np.testing.assert_array_equal(graphs.mu.order, quick_chain.graphs.mu.order)
        assert graphs.beta_columns == quick_chain.graphs.beta_columns

    def test_manifest_is_json(self, saved):
        manifest = json.loads((saved.root / CHAIN_MANIFEST_NAME).read_text())
        assert manifest["format_version"] == 1
        assert manifest["agent_names"] == ["lm", "knn"]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(ChainStoreError, match="directory not found"):
            ChainStore(tmp_path / "nowhere").load()

    def test_missing_manifest(self, tmp_path):
        (tmp_path / "chain").mkdir()
        with pytest.raises(ChainStoreError, match="manifest not found"):
            ChainStore(tmp_path / "chain").load()

    def test_corrupt_manifest(self, saved):
        saved.manifest_path.write_text("{not json")
        with pytest.raises(ChainStoreError, match="not valid JSON"):
            saved.load()

    def test_other_format_version(self, saved):
        manifest = json.loads(saved.manifest_path.read_text())
        manifest["format_version"] = 99
        saved.manifest_path.write_text(json.dumps(manifest))
        with pytest.raises(ChainStoreError) as exc_info:
            saved.load()
        assert exc_info.value.details == {"found": 99, "expected": 1}

    def test_incomplete_manifest(self, saved):
        manifest = json.loads(saved.manifest_path.read_text())
        del manifest["priors"]
        saved.manifest_path.write_text(json.dumps(manifest))
        with pytest.raises(ChainStoreError, match="incomplete"):
            saved.load()

    def test_missing_array(self, saved):
        (saved.root / "draws_sigma2.npy").unlink()
        with pytest.raises(ChainStoreError, match="array missing"):
            saved.load()
