"""Exception types shared across the package."""


class WassriskError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(WassriskError):
    """Inputs are malformed or out of range; nothing was computed."""


class DimensionMismatch(ValidationError):
    """Operands live in spaces of different dimension."""


class ComputeError(WassriskError):
    """A computation started but could not produce a trustworthy result."""
