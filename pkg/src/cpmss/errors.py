"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid static parameters (taps, modulation index, power split, ...)."""


class InputError(ValueError):
    """A signal or symbol vector that does not fit the operation."""


class DegenerateChannelError(ValueError):
    """Channel coefficient too small to equalise."""


class NumericalError(RuntimeError):
    """Quadrature or root finding that failed to reach its tolerance."""
