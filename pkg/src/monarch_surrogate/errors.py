"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes or sizes are incompatible with the requested operation."""


class ConfigurationError(ValueError):
    """A configuration value is outside the supported set."""


class NumericError(ArithmeticError):
    """Input values are numerically unusable (NaN, non-positive, ...)."""


class ContractError(RuntimeError):
    """An API contract was violated by the caller."""
