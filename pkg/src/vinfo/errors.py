"""Exception hierarchy shared across the toolkit.

Everything raised on purpose derives from ``VinfoError`` so callers (and the
CLI) can distinguish contract violations from genuine bugs.
"""


class VinfoError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(VinfoError, ValueError):
    """Data violates an invariant: bad schema, duplicate id, unknown label."""


class ConfigurationError(VinfoError, ValueError):
    """Inconsistent or impossible configuration (mismatched label spaces,
    overlapping field lists, transform params invalid for their kind)."""


class EmptyDataError(VinfoError, ValueError):
    """An operation that needs at least one instance received none."""


class UndefinedStatisticError(VinfoError, ValueError):
    """A statistic has no defined value on this input (empty group in the
    correct/incorrect gap, zero variance in a correlation)."""
