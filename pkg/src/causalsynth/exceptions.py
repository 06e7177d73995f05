"""Custom exceptions for causalsynth.

This module defines a hierarchy of exceptions used throughout causalsynth.
All exceptions inherit from CausalSynthError, making it easy to catch
all package errors in one place. Every error knows the process exit code
the CLI should use and can render itself as a single-line JSON diagnostic.

Exception Hierarchy:
    CausalSynthError (base)
    ├── ConfigError - Configuration or scenario file failures (exit 2)
    ├── DataValidationError - Dataset or agent invariant violations
    ├── EncodingError - Covariate encoding failures (exit 3)
    ├── NngpError - Kernel domain errors
    │   └── FactorizationError - Singular neighbor correlation matrix
    ├── SamplerError - Gibbs step failures, tagged with iteration and step
    ├── AgentError (base for estimator failures)
    │   └── PropensityError
    ├── PredictionError - Out-of-sample prediction input errors
    └── ChainStoreError - Chain directory read/write failures
"""

import json
from typing import Any, ClassVar


class CausalSynthError(Exception):
    """Base exception for all causalsynth errors.

    Args:
        message: Human-readable error message.
        details: Optional dictionary with additional error context.
    """

    exit_code: ClassVar[int] = 1

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} | Details: {self.details}"
        return self.message

    def to_json(self) -> str:
        """Render the error as a single-line JSON object."""
        payload = {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }
        return json.dumps(payload, default=str, separators=(",", ":"))


class ConfigError(CausalSynthError):
    """Raised when configuration loading or validation fails.

    Examples:
        - Invalid YAML syntax in a scenario file
        - Field outside its allowed range (replications=0, p<5)
        - Unknown agent name in a roster
    """

    exit_code: ClassVar[int] = 2


class DataValidationError(CausalSynthError):
    """Raised when a dataset or agent posterior violates its invariants.

    The itemized problems are available as ``errors`` and in ``details``.
    """

    def __init__(self, message: str, errors: list[str]) -> None:
        super().__init__(message, {"errors": errors})
        self.errors = errors


class EncodingError(CausalSynthError):
    """Raised when covariates cannot be encoded.

    Examples:
        - Constant continuous column (zero variance)
        - Category not seen when the encoding was fitted
        - Column set differs from the training encoding
    """

    exit_code: ClassVar[int] = 3


class NngpError(CausalSynthError, ValueError):
    """Raised for invalid kernel or graph arguments (non-positive range, empty input)."""


class FactorizationError(NngpError):
    """Raised when a neighbor correlation matrix is singular even after jitter.

    Args:
        message: Human-readable error message.
        point: Index of the point whose conditioning failed.
        details: Optional dictionary with additional error context.
    """

    def __init__(self, message: str, point: int, details: dict[str, Any] | None = None) -> None:
        super().__init__(message, {"point": point, **(details or {})})
        self.point = point


class SamplerError(CausalSynthError):
    """Raised when a Gibbs step fails.

    Args:
        message: Human-readable error message.
        iteration: Sweep index at which the failure happened.
        step: Name of the failing step (for example ``"beta"`` or ``"phi"``).
        details: Optional dictionary with additional error context.
    """

    def __init__(
        self,
        message: str,
        iteration: int,
        step: str,
        details: dict[str, Any] | None = None,
    ) -> None:
        super().__init__(message, {"iteration": iteration, "step": step, **(details or {})})
        self.iteration = iteration
        self.step = step


class AgentError(CausalSynthError):
    """Base exception for estimator failures.

    Args:
        message: Human-readable error message.
        agent_name: Name of the agent that raised the error.
        details: Optional dictionary with additional error context.
    """

    def __init__(
        self,
        message: str,
        agent_name: str,
        details: dict[str, Any] | None = None,
    ) -> None:
        super().__init__(message, details)
        self.agent_name = agent_name

    def __str__(self) -> str:
        base = f"[{self.agent_name}] {self.message}"
        if self.details:
            return f"{base} | Details: {self.details}"
        return base

    def to_json(self) -> str:
        payload = {
            "error": type(self).__name__,
            "agent": self.agent_name,
            "message": self.message,
            "details": self.details,
        }
        return json.dumps(payload, default=str, separators=(",", ":"))


class PropensityError(AgentError):
    """Raised when the propensity model cannot be fitted.

    Examples:
        - Complete separation (a coefficient diverges)
        - Only one treatment arm present
    """

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        super().__init__(message, agent_name="propensity", details=details)


class PredictionError(CausalSynthError):
    """Raised when prediction inputs are incomplete, e.g. a missing agent value."""


class ChainStoreError(CausalSynthError):
    """Raised when a chain directory is missing, incomplete or from another format version."""
