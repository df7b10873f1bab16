"""Exception and warning types shared across the package."""


class PedbnError(Exception):
    """Base class for all package-specific errors."""


class InvalidModelError(PedbnError, ValueError):
    """Raised when grids, parameters, or priors violate their invariants.

    The message lists every violation found, not just the first.
    """


class InferenceError(PedbnError, FloatingPointError):
    """Raised when a filtering pass fails numerically.

    The only trigger is a scaling constant underflowing to zero, which
    means the observation is impossibly far from every grid cell at the
    current noise level.
    """


class DataError(PedbnError, ValueError):
    """Raised for malformed or unusable market data files."""


class ConfigError(PedbnError, ValueError):
    """Raised for out-of-range or inconsistent run configuration."""


class ConvergenceWarning(UserWarning):
    """Emitted when a fit stops at the iteration cap or hits a guard."""
