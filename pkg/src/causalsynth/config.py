"""Configuration loader for causalsynth.

This module handles loading project configuration and scenario files from
YAML, with support for environment variable expansion. Validation failures
are converted into ConfigError carrying the offending field path and, where
the YAML source is available, the line number.

Example:
    config = load_config()
    settings = config.sampler

    scenario = load_scenario(Path("study.yaml"))
    desk = bundled_scenario("scenario1_desk")
"""

from __future__ import annotations

import os
import re
from importlib import resources
from pathlib import Path
from typing import Any, TypeVar

import yaml
from pydantic import BaseModel, ValidationError

from causalsynth.constants import CONFIG_FILE_NAME, WORKERS_ENV_VAR
from causalsynth.exceptions import ConfigError
from causalsynth.logging import get_logger
from causalsynth.models import CausalSynthConfig, ScenarioConfig

logger = get_logger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

# ${NAME} or $NAME
ENV_VAR_PATTERN = re.compile(r"\$\{([^}]+)\}|\$([A-Za-z_][A-Za-z0-9_]*)")

SCENARIO_PACKAGE = "causalsynth.scenarios"


def _substitute(match: re.Match[str]) -> str:
    return os.environ.get(match.group(1) or match.group(2), match.group(0))


def expand_env_vars(value: Any) -> Any:
    """Expand ``${NAME}`` and ``$NAME`` in every string of a parsed YAML tree.

    Unset variables stay as written, so validation reports them verbatim.
    """
    match value:
        case str():
            return ENV_VAR_PATTERN.sub(_substitute, value)
        case dict():
            return {key: expand_env_vars(item) for key, item in value.items()}
        case list():
            return [expand_env_vars(item) for item in value]
        case _:
            return value


def find_config_file(start: Path | None = None) -> Path | None:
    """Nearest .causalsynth.yaml in ``start`` (default: cwd) or its parents."""
    here = (start or Path.cwd()).resolve()
    return next(
        (d / CONFIG_FILE_NAME for d in (here, *here.parents) if (d / CONFIG_FILE_NAME).is_file()),
        None,
    )


def load_config(config_path: Path | None = None) -> CausalSynthConfig:
    """Load the project configuration.

    Args:
        config_path: Path to a config file. If None, searches for .causalsynth.yaml
            in the current directory and its parents; defaults apply when none exists.

    Returns:
        Validated configuration.

    Raises:
        ConfigError: If the file is unreadable, not valid YAML or fails validation.
    """
    if config_path is None:
        config_path = find_config_file()
        if config_path is None:
            return CausalSynthConfig()
    elif not config_path.exists():
        raise ConfigError(f"Config file not found: {config_path}", {"path": str(config_path)})

    logger.debug("Loading config", extra={"path": str(config_path)})
    return parse_yaml_model(config_path.read_text(), CausalSynthConfig, source=str(config_path))


def load_scenario(path: Path) -> ScenarioConfig:
    """Load and validate a scenario file.

    Raises:
        ConfigError: With ``line`` and ``field`` details for the first problem.
    """
    if not path.exists():
        raise ConfigError(f"Scenario file not found: {path}", {"path": str(path)})
    return parse_yaml_model(path.read_text(), ScenarioConfig, source=str(path))


def bundled_scenario(name: str) -> ScenarioConfig:
    """Load one of the scenario files shipped with the package.

    Args:
        name: File stem, e.g. ``"scenario1_desk"``.
    """
    resource = resources.files(SCENARIO_PACKAGE).joinpath(f"{name}.yaml")
    if not resource.is_file():
        raise ConfigError(
            f"Unknown bundled scenario '{name}'",
            {"available": list_bundled_scenarios()},
        )
    return parse_yaml_model(resource.read_text(), ScenarioConfig, source=f"<bundled:{name}>")


def list_bundled_scenarios() -> list[str]:
    """Names of the bundled scenario files."""
    return sorted(
        Path(entry.name).stem
        for entry in resources.files(SCENARIO_PACKAGE).iterdir()
        if entry.name.endswith(".yaml")
    )


def parse_yaml_model(text: str, model: type[ModelT], *, source: str) -> ModelT:
    """Parse YAML text into ``model``, mapping failures to ConfigError.

    Args:
        text: YAML document.
        model: Pydantic model class to validate against.
        source: Name used in diagnostics (usually the file path).
    """
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        details: dict[str, Any] = {"source": source}
        if mark is not None:
            details["line"] = mark.line + 1
            details["column"] = mark.column + 1
        raise ConfigError(f"Invalid YAML: {getattr(e, 'problem', e)}", details) from e

    if not isinstance(data, dict):
        raise ConfigError("Top level of a config file must be a mapping", {"source": source})

    data = expand_env_vars(data)

    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = tuple(first["loc"])
        field = ".".join(str(part) for part in loc) or "<root>"
        details = {"source": source, "field": field, "errors": len(e.errors())}
        line = _line_of(text, loc)
        if line is not None:
            details["line"] = line
        raise ConfigError(f"Invalid value for '{field}': {first['msg']}", details) from e


def _line_of(text: str, loc: tuple[Any, ...]) -> int | None:
    """Find the 1-based line of the YAML node addressed by a validation ``loc``."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    line = None
    for part in loc:
        if isinstance(node, yaml.MappingNode):
            match = next((kv for kv in node.value if kv[0].value == str(part)), None)
            if match is None:
                break
            line = match[0].start_mark.line + 1
            node = match[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int):
            if part >= len(node.value):
                break
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            break
    return line


def resolve_workers(explicit: int | None = None) -> int:
    """Worker count: explicit value, else the environment variable, else 1."""
    if explicit is not None:
        return explicit
    raw = os.environ.get(WORKERS_ENV_VAR)
    if raw is None:
        return 1
    try:
        workers = int(raw)
    except ValueError as e:
        raise ConfigError(
            f"{WORKERS_ENV_VAR} must be a positive integer", {"value": raw}
        ) from e
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV_VAR} must be a positive integer", {"value": raw})
    return workers
