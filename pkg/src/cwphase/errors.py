"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A parameter set the simulation cannot honour."""


class NumericalInstabilityError(ArithmeticError):
    """A filter left its valid region (sharpness above one, underflow, ...)."""
