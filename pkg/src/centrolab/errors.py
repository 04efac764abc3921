"""
Exception hierarchy for centrolab.

Every error raised by the library derives from CentrolabError and carries
the CLI exit code it maps to.
"""

from typing import Any, Optional


class CentrolabError(Exception):
    """Base class for all centrolab errors."""

    exit_code = 1


class ConfigError(CentrolabError, ValueError):
    """Invalid configuration or hyper-parameter."""


class ShapeError(CentrolabError, ValueError):
    """Array dimensions do not chain or do not match."""


class DataError(CentrolabError, ValueError):
    """Data violates an operation precondition."""


class UnsupportedError(CentrolabError):
    """Operation is not available for the given input."""


class NumericError(CentrolabError, ArithmeticError):
    """Non-finite values reached an optimizer or a loss."""

    exit_code = 2

    def __init__(self, message: str, trace: Optional[Any] = None):
        super().__init__(message)
        self.trace = trace


class AcceptanceError(CentrolabError):
    """A verification or ordering check did not pass."""

    exit_code = 3
