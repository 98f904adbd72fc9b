"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical/resource failures with 3.
"""


class DequeLabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(DequeLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UnsupportedCaseError(DequeLabError):
    """A closed form was requested outside the parameter regime where it exists."""


class NumericalOverflowError(DequeLabError):
    """An intermediate quantity is not representable even after log-space rewriting."""


class ResourceLimitError(DequeLabError):
    """A hard resource cap (state-space truncation, iteration budget) was hit."""


class TruncationError(DequeLabError):
    """Probability mass reached the edge of a truncated state space."""


class ConfigError(DequeLabError):
    """A scenario or comparison configuration is invalid."""
