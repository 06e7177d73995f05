"""Dataset ingestion, covariate encoding and validation.

CSV layout:
    data file   columns ``y``, ``t``, optional ``pi``, then covariates
    agent file  columns ``tau_hat_1, se_1, ..., tau_hat_J, se_J``, row-aligned
                with the data file

Encoding rules:
    continuous   standardized with the sample mean and population sd (ddof=0)
    binary       passed through as 0/1
    categorical  one-hot, first level (in sorted order) dropped

Example:
    data, report = read_data_csv(Path("study.csv"), categorical=["region"])
    agents = read_agent_csv(Path("agents.csv"))
    require_valid(data, agents)
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from causalsynth.constants import CSV_FLOAT_FORMAT
from causalsynth.exceptions import DataValidationError, EncodingError
from causalsynth.logging import get_logger
from causalsynth.models import (
    AgentPosterior,
    ColumnKind,
    ColumnTransform,
    EncodingReport,
    ObservedData,
    ValidationReport,
)

logger = get_logger(__name__)

OUTCOME_COLUMN = "y"
TREATMENT_COLUMN = "t"
DEFAULT_PI_COLUMN = "pi"


# =============================================================================
# ENCODING
# =============================================================================


def infer_kind(series: pd.Series) -> ColumnKind:
    """Guess the kind of an untagged column.

    Non-numeric columns are categorical, numeric columns holding only 0 and 1
    are binary, everything else is continuous.
    """
    if pd.api.types.is_bool_dtype(series):
        return "binary"
    if not pd.api.types.is_numeric_dtype(series):
        return "categorical"
    values = set(pd.unique(series.dropna()))
    if values and values <= {0, 1}:
        return "binary"
    return "continuous"


def _level_key(value: Any) -> str:
    if isinstance(value, float | np.floating) and float(value).is_integer():
        return str(int(value))
    return str(value)


def _sorted_levels(series: pd.Series) -> list[str]:
    unique = pd.unique(series)
    try:
        ordered = sorted(unique)
    except TypeError:
        ordered = sorted(unique, key=str)
    keys: list[str] = []
    for value in ordered:
        key = _level_key(value)
        if key not in keys:
            keys.append(key)
    return keys


def encode_covariates(
    table: pd.DataFrame,
    kinds: dict[str, ColumnKind] | None = None,
) -> tuple[np.ndarray, EncodingReport]:
    """Encode a mixed-type covariate table into a real matrix.

    Args:
        table: Raw covariates, one column per variable, at least one row.
        kinds: Column kinds; untagged columns are inferred with ``infer_kind``.

    Returns:
        The encoded matrix and the report needed to re-encode new rows.

    Raises:
        EncodingError: On an empty table, missing values, a constant continuous
            column or a non-0/1 binary column.
    """
    if table.shape[0] < 1:
        raise EncodingError("Covariate table has no rows")
    kinds = kinds or {}
    unknown = sorted(set(kinds) - set(table.columns))
    if unknown:
        raise EncodingError("Kinds given for columns not in the table", {"columns": unknown})

    transforms: list[ColumnTransform] = []
    for name in table.columns:
        series = table[name]
        if series.isna().any():
            raise EncodingError(f"Column '{name}' has missing values", {"column": str(name)})
        kind = kinds.get(name) or infer_kind(series)
        transforms.append(_fit_transform(str(name), kind, series))

    report = EncodingReport(columns=transforms)
    encoded = apply_encoding(table, report)
    logger.debug(
        "Encoded covariates",
        extra={"raw_columns": table.shape[1], "encoded_columns": encoded.shape[1]},
    )
    return encoded, report


def _fit_transform(name: str, kind: ColumnKind, series: pd.Series) -> ColumnTransform:
    if kind == "continuous":
        values = pd.to_numeric(series, errors="coerce").to_numpy(dtype=np.float64)
        if np.isnan(values).any():
            raise EncodingError(f"Column '{name}' is not numeric", {"column": name})
        sd = float(values.std())
        if not sd > 0.0:
            raise EncodingError(
                f"Column '{name}' has zero variance and cannot be standardized",
                {"column": name},
            )
        return ColumnTransform(
            name=name, kind=kind, mean=float(values.mean()), sd=sd, outputs=[name]
        )
    if kind == "binary":
        return ColumnTransform(name=name, kind=kind, outputs=[name])
    levels = _sorted_levels(series)
    return ColumnTransform(
        name=name,
        kind=kind,
        levels=levels,
        outputs=[f"{name}_{level}" for level in levels[1:]],
    )


def apply_encoding(table: pd.DataFrame, report: EncodingReport) -> np.ndarray:
    """Encode ``table`` with a previously fitted report.

    Raises:
        EncodingError: If columns are missing or unexpected, a category was not
            seen at fit time, or a binary column holds other values.
    """
    expected = report.input_names
    missing = [c for c in expected if c not in table.columns]
    extra = [str(c) for c in table.columns if c not in expected]
    if missing or extra:
        raise EncodingError(
            "Covariate columns do not match the training encoding",
            {"missing": missing, "unexpected": extra},
        )

    blocks: list[np.ndarray] = []
    for transform in report.columns:
        series = table[transform.name]
        if series.isna().any():
            raise EncodingError(
                f"Column '{transform.name}' has missing values", {"column": transform.name}
            )
        if transform.kind == "continuous":
            assert transform.mean is not None and transform.sd is not None
            values = pd.to_numeric(series, errors="coerce").to_numpy(dtype=np.float64)
            if np.isnan(values).any():
                raise EncodingError(
                    f"Column '{transform.name}' is not numeric", {"column": transform.name}
                )
            blocks.append(((values - transform.mean) / transform.sd)[:, None])
        elif transform.kind == "binary":
            values = pd.to_numeric(series, errors="coerce").to_numpy(dtype=np.float64)
            if not np.all(np.isin(values, (0.0, 1.0))):
                raise EncodingError(
                    f"Binary column '{transform.name}' must hold only 0 and 1",
                    {"column": transform.name},
                )
            blocks.append(values[:, None])
        else:
            assert transform.levels is not None
            keys = [_level_key(v) for v in series]
            unseen = sorted(set(keys) - set(transform.levels))
            if unseen:
                raise EncodingError(
                    f"Unseen category in column '{transform.name}'",
                    {"column": transform.name, "levels": unseen},
                )
            key_array = np.asarray(keys, dtype=object)
            indicators = [
                (key_array == level).astype(np.float64) for level in transform.levels[1:]
            ]
            if indicators:
                blocks.append(np.column_stack(indicators))

    if not blocks:
        return np.zeros((table.shape[0], 0))
    return np.hstack(blocks)


def encoded_column_indices(report: EncodingReport, names: Iterable[str]) -> list[int]:
    """Encoded column positions produced by the given raw columns."""
    wanted = list(names)
    unknown = [n for n in wanted if n not in report.input_names]
    if unknown:
        raise EncodingError("Unknown covariate columns", {"columns": unknown})
    indices: list[int] = []
    position = 0
    for transform in report.columns:
        width = len(transform.outputs)
        if transform.name in wanted:
            indices.extend(range(position, position + width))
        position += width
    return indices


# =============================================================================
# CSV INGESTION
# =============================================================================


def read_data_csv(
    path: Path,
    *,
    categorical: Sequence[str] = (),
    pi_column: str | None = None,
) -> tuple[ObservedData, EncodingReport]:
    """Read a data CSV and encode its covariates.

    Args:
        path: File with ``y``, ``t``, optional propensity column and covariates.
        categorical: Covariates forced to categorical.
        pi_column: Propensity column name; ``pi`` is used when present.

    Raises:
        DataValidationError: If ``y`` or ``t`` is missing.
        EncodingError: If a covariate cannot be encoded.
    """
    frame = pd.read_csv(path)
    missing = [c for c in (OUTCOME_COLUMN, TREATMENT_COLUMN) if c not in frame.columns]
    if missing:
        raise DataValidationError(
            f"Data file {path} lacks required columns",
            [f"missing column '{c}'" for c in missing],
        )
    pi_name = pi_column or (DEFAULT_PI_COLUMN if DEFAULT_PI_COLUMN in frame.columns else None)
    if pi_name is not None and pi_name not in frame.columns:
        raise DataValidationError(
            f"Data file {path} lacks the propensity column", [f"missing column '{pi_name}'"]
        )

    reserved = {OUTCOME_COLUMN, TREATMENT_COLUMN, pi_name}
    covariates = frame[[c for c in frame.columns if c not in reserved]]
    x, report = encode_covariates(covariates, {name: "categorical" for name in categorical})

    data = ObservedData(
        y=frame[OUTCOME_COLUMN].to_numpy(dtype=np.float64),
        t=frame[TREATMENT_COLUMN].to_numpy(dtype=np.float64),
        x=x,
        pi=None if pi_name is None else frame[pi_name].to_numpy(dtype=np.float64),
        covariate_names=report.encoded_names,
    )
    logger.info(
        "Loaded data file",
        extra={"path": str(path), "n": data.n, "p": data.p},
    )
    return data, report


def read_agent_csv(path: Path, *, first_index: int = 1) -> list[AgentPosterior]:
    """Read ``tau_hat_j, se_j`` column pairs from a plug-in agent file.

    Raises:
        DataValidationError: If no pairs are present or a pair is incomplete.
    """
    frame = pd.read_csv(path)
    indices = sorted(
        int(c.removeprefix("tau_hat_"))
        for c in frame.columns
        if c.startswith("tau_hat_") and c.removeprefix("tau_hat_").isdigit()
    )
    errors = [f"missing column 'se_{j}'" for j in indices if f"se_{j}" not in frame.columns]
    if not indices:
        errors.append("no tau_hat_j columns found")
    if errors:
        raise DataValidationError(f"Agent file {path} is malformed", errors)

    agents = [
        AgentPosterior(
            j=first_index + position,
            name=f"external{j}",
            tau_hat=frame[f"tau_hat_{j}"].to_numpy(dtype=np.float64),
            se=frame[f"se_{j}"].to_numpy(dtype=np.float64),
        )
        for position, j in enumerate(indices)
    ]
    logger.info("Loaded agent file", extra={"path": str(path), "agents": len(agents)})
    return agents


def write_agent_csv(path: Path, agents: Sequence[AgentPosterior]) -> None:
    """Write agents in the plug-in format, numbered 1..J in the given order."""
    columns: dict[str, np.ndarray] = {}
    for position, agent in enumerate(agents, start=1):
        columns[f"tau_hat_{position}"] = agent.tau_hat
        columns[f"se_{position}"] = agent.se
    frame = pd.DataFrame(columns)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)


# =============================================================================
# VALIDATION
# =============================================================================


def validate_dataset(data: ObservedData, agents: Sequence[AgentPosterior]) -> ValidationReport:
    """Check every data and agent invariant.

    Returns:
        A report with n, p, J, the treated fraction and an itemized error list;
        ``report.ok`` is True when the list is empty.
    """
    errors = data.problems()
    for agent in agents:
        errors.extend(agent.problems(data.n))
    indices = [agent.j for agent in agents]
    if sorted(indices) != list(range(1, len(agents) + 1)):
        errors.append(f"agent indices must be 1..{len(agents)}, got {indices}")

    treated_fraction = float(np.mean(data.t)) if data.t.size else 0.0
    return ValidationReport(
        n=data.n,
        p=data.p,
        J=len(agents),
        treated_fraction=treated_fraction,
        errors=errors,
    )


def require_valid(data: ObservedData, agents: Sequence[AgentPosterior]) -> ValidationReport:
    """Validate and raise DataValidationError listing every problem."""
    report = validate_dataset(data, agents)
    if not report.ok:
        raise DataValidationError("Dataset failed validation", report.errors)
    return report
