"""Exception types shared across the library and mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid configuration: unknown keys, malformed model specs, bad names."""


class NumericalIntegrityError(RuntimeError):
    """A numerical guarantee was violated (Hermiticity, probability bounds, ...)."""


class ResourceError(RuntimeError):
    """A computation would exceed the configured dense-matrix size limit."""
