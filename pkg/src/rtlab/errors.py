"""Exception hierarchy shared by every rtlab module."""

from __future__ import annotations


class RTLabError(Exception):
    """Base class for all rtlab failures."""


class ValidationError(RTLabError, ValueError):
    """An input violates a documented precondition or type invariant."""


class TieError(RTLabError):
    """A deterministic decision rule met a tie it refuses to break.

    Attributes:
        candidates: the tied classes or item indices.
    """

    def __init__(self, message: str, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


class EmptyPartitionError(ValidationError):
    """A class or feature partition that must be inhabited is empty."""


class OracleError(RTLabError):
    """A ground-truth rule is undefined on the state it was asked about."""


class ConfigError(RTLabError):
    """A CLI configuration document failed validation.

    Attributes:
        line: 1-based line of the offending construct, if known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
