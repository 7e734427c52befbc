"""Semantic exception hierarchy shared by all risharq modules."""


class RisHarqError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RisHarqError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(RisHarqError, ValueError):
    """A configuration object or scenario file violates its contract."""


class TruncationError(RisHarqError, ArithmeticError):
    """A series could not be truncated to the requested tolerance."""


class FitError(RisHarqError):
    """A curve fit has too few usable points or is otherwise degenerate."""


class DegenerateNetworkError(RisHarqError):
    """The network has no reflecting elements to optimize."""
