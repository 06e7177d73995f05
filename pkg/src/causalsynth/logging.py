"""Logging configuration for causalsynth.

Every module logs through ``get_logger(__name__)``. Records carry their
numbers as ``extra`` fields, which the formatter appends as ``key=value``
pairs after the message:

    logger.info("Chain finished", extra={"retained": 1500, "seconds": 41.2})
    # ... | causalsynth.sampler | Chain finished | retained=1500 | seconds=41.2

Logs go to stderr only; stdout belongs to command results. Simulation
worker processes call ``setup_logging`` again with the parent's level and
tag their records with ``LogContext(logger, replicate=r)``.
"""

import logging
import sys
from typing import TYPE_CHECKING, Any

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Callable

from causalsynth.constants import LOG_DATE_FORMAT, LOG_FORMAT

PACKAGE_LOGGER = "causalsynth"
SHORT_FORMAT = "%(levelname)-8s | %(name)s | %(message)s"

# Attributes every LogRecord has; anything else came in through ``extra``.
_RECORD_ATTRS = frozenset(
    logging.LogRecord("", logging.INFO, "", 0, "", None, None).__dict__
) | {"message", "asctime", "taskName"}


def render_field(value: Any) -> str:
    """Render one structured field compactly.

    Floats (NumPy scalars included) get six significant digits and arrays
    are summarized by shape, so a stray array never floods the log.
    """
    if isinstance(value, np.ndarray):
        return f"array{tuple(value.shape)}"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    if isinstance(value, np.integer):
        return str(int(value))
    if isinstance(value, (list, tuple)) and len(value) > 8:
        return f"[{len(value)} items]"
    return str(value)


class StructuredFormatter(logging.Formatter):
    """Formatter that appends ``extra`` fields as ``key=value`` pairs."""

    def format(self, record: logging.LogRecord) -> str:
        message = super().format(record)
        fields = [
            f"{key}={render_field(value)}"
            for key, value in record.__dict__.items()
            if key not in _RECORD_ATTRS and not key.startswith("_")
        ]
        if not fields:
            return message
        return " | ".join([message, *fields])


def setup_logging(level: int = logging.INFO, *, include_timestamp: bool = True) -> None:
    """Install a single stderr handler with the structured formatter.

    Calling it again replaces the handler, so worker processes and the
    CLI can both call it safely.

    Args:
        level: Level for the package loggers.
        include_timestamp: Prefix lines with date and time.
    """
    if include_timestamp:
        formatter = StructuredFormatter(LOG_FORMAT, datefmt=LOG_DATE_FORMAT)
    else:
        formatter = StructuredFormatter(SHORT_FORMAT)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    root = logging.getLogger()
    for existing in root.handlers[:]:
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(max(level, logging.WARNING))
    logging.getLogger(PACKAGE_LOGGER).setLevel(level)


def get_logger(name: str) -> logging.Logger:
    """Logger for a module of this package (pass ``__name__``)."""
    return logging.getLogger(name)


class LogContext:
    """Stamp fields on every record created inside the block.

    Usage:
        with LogContext(logger, replicate=3, scenario="scenario1_desk"):
            logger.info("Fitting agents")
            # ... | Fitting agents | replicate=3 | scenario=scenario1_desk

    Contexts nest; the inner fields win on a name clash.
    """

    def __init__(self, logger: logging.Logger, **fields: Any) -> None:
        self.logger = logger
        self.fields = fields
        self._previous: Callable[..., logging.LogRecord] | None = None

    def __enter__(self) -> "LogContext":
        previous = logging.getLogRecordFactory()
        self._previous = previous
        fields = self.fields

        def factory(*args: Any, **kwargs: Any) -> logging.LogRecord:
            record = previous(*args, **kwargs)
            record.__dict__.update(fields)
            return record

        logging.setLogRecordFactory(factory)
        return self

    def __exit__(self, *args: Any) -> None:
        if self._previous is not None:
            logging.setLogRecordFactory(self._previous)
            self._previous = None
