"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid physical or run configuration (bad value, unknown key, ...)."""


class IntegrationError(RuntimeError):
    """Time integration failed or was rejected (step-size guard, NaN, ...)."""


class UnreliableResultError(RuntimeError):
    """A computed quantity failed its internal consistency checks."""


class UnsaturatedHorizonError(UnreliableResultError):
    """Horizon too short: the state still carries norm at the final time."""


class OptimizationError(RuntimeError):
    """Every candidate evaluation in an optimization was flagged unreliable."""
