"""Chain directory persistence.

A finished chain is written to a directory so prediction can run later
without re-sampling. The layout is:

    manifest.json       format version, sampler settings, resolved priors,
                        encoding report, agent names, diagnostics
    draws_<field>.npy   retained draws, one array per PosteriorDraws field
    data_<field>.npy    training outcomes, treatments, covariates, propensities

Graphs are rebuilt from the stored covariates on load, which reproduces the
training graphs exactly because construction is deterministic.

Example:
    store = ChainStore(out / "chain")
    store.save(chain, encoding=report, settings=settings, agent_names=["lm", "knn"])
    stored = ChainStore(out / "chain").load()
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from causalsynth.constants import CHAIN_FORMAT_VERSION, CHAIN_MANIFEST_NAME
from causalsynth.exceptions import ChainStoreError
from causalsynth.logging import get_logger
from causalsynth.models import (
    ChainDiagnostics,
    EncodingReport,
    ObservedData,
    PosteriorDraws,
    Priors,
    SamplerSettings,
)
from causalsynth.sampler import ChainResult, build_field_graphs

logger = get_logger(__name__)

_DRAW_FIELDS = ("mu", "beta", "f", "sigma2", "tau2_mu", "tau2_beta", "phi_mu", "phi_beta")
_DATA_FIELDS = ("y", "t", "x", "pi")


@dataclass(frozen=True)
class StoredChain:
    """A chain read back from disk together with what produced it."""

    chain: ChainResult
    encoding: EncodingReport
    settings: SamplerSettings
    agent_names: list[str]


class ChainStore:
    """Reads and writes one chain directory.

    The directory holds a JSON manifest and one ``.npy`` file per array.
    """

    def __init__(self, root: Path) -> None:
        """Initialize the store.

        Args:
            root: Chain directory (created on save).
        """
        self._root = Path(root)

    @property
    def root(self) -> Path:
        return self._root

    @property
    def manifest_path(self) -> Path:
        return self._root / CHAIN_MANIFEST_NAME

    def exists(self) -> bool:
        return self.manifest_path.is_file()

    def save(
        self,
        chain: ChainResult,
        *,
        encoding: EncodingReport,
        settings: SamplerSettings,
        agent_names: list[str],
    ) -> None:
        """Write the chain, replacing any arrays already in the directory."""
        self._root.mkdir(parents=True, exist_ok=True)
        for name in _DRAW_FIELDS:
            np.save(self._root / f"draws_{name}.npy", getattr(chain.draws, name))
        for name in _DATA_FIELDS:
            np.save(self._root / f"data_{name}.npy", getattr(chain.data, name))

        manifest: dict[str, Any] = {
            "format_version": CHAIN_FORMAT_VERSION,
            "settings": settings.model_dump(mode="json"),
            "priors": chain.priors.model_dump(mode="json"),
            "encoding": encoding.model_dump(mode="json"),
            "agent_names": list(agent_names),
            "covariate_names": list(chain.data.covariate_names),
            "beta_columns": list(chain.graphs.beta_columns),
            "diagnostics": chain.diagnostics.model_dump(mode="json"),
        }
        self.manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        logger.info(
            "Saved chain",
            extra={"path": str(self._root), "draws": chain.draws.n_draws},
        )

    def _read_manifest(self) -> dict[str, Any]:
        if not self._root.is_dir():
            raise ChainStoreError("Chain directory not found", {"path": str(self._root)})
        if not self.exists():
            raise ChainStoreError("Chain manifest not found", {"path": str(self.manifest_path)})
        try:
            manifest = json.loads(self.manifest_path.read_text())
        except json.JSONDecodeError as e:
            raise ChainStoreError(
                "Chain manifest is not valid JSON", {"path": str(self.manifest_path)}
            ) from e
        version = manifest.get("format_version")
        if version != CHAIN_FORMAT_VERSION:
            raise ChainStoreError(
                "Unsupported chain format version",
                {"found": version, "expected": CHAIN_FORMAT_VERSION},
            )
        return dict(manifest)

    def _array(self, name: str) -> np.ndarray:
        path = self._root / f"{name}.npy"
        if not path.is_file():
            raise ChainStoreError("Chain array missing", {"path": str(path)})
        return np.asarray(np.load(path, allow_pickle=False))

    def load(self) -> StoredChain:
        """Read the chain back and rebuild its graphs.

        Raises:
            ChainStoreError: If the directory, manifest or an array is
                missing, or the manifest belongs to another format version.
        """
        manifest = self._read_manifest()
        try:
            settings = SamplerSettings.model_validate(manifest["settings"])
            priors = Priors.model_validate(manifest["priors"])
            encoding = EncodingReport.model_validate(manifest["encoding"])
            diagnostics = ChainDiagnostics.model_validate(manifest["diagnostics"])
            agent_names = [str(name) for name in manifest["agent_names"]]
            covariate_names = [str(name) for name in manifest["covariate_names"]]
        except (KeyError, ValidationError) as e:
            raise ChainStoreError("Chain manifest is incomplete", {"reason": str(e)}) from e

        draws = PosteriorDraws.from_arrays(
            **{name: self._array(f"draws_{name}") for name in _DRAW_FIELDS}
        )
        data = ObservedData(
            covariate_names=covariate_names,
            **{name: self._array(f"data_{name}") for name in _DATA_FIELDS},
        )
        graphs = build_field_graphs(data, settings)
        chain = ChainResult(
            draws=draws, diagnostics=diagnostics, priors=priors, graphs=graphs, data=data
        )
        logger.debug("Loaded chain", extra={"path": str(self._root), "draws": draws.n_draws})
        return StoredChain(
            chain=chain, encoding=encoding, settings=settings, agent_names=agent_names
        )
