"""Exception hierarchy shared across the package."""


class SgoalError(Exception):
    """Base class for all package errors."""


class UsageError(SgoalError):
    """An operation was called with arguments that violate its contract."""


class ConfigError(SgoalError):
    """An algorithm, kernel, or experiment was assembled inconsistently."""
