"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A parameter or config file violates a documented bound."""


class CapacityError(RuntimeError):
    """An exhaustive enumeration was requested on an instance too large for it."""
