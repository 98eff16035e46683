"""Exception types raised by the library and the command-line runner."""


class DecayQuenchError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(DecayQuenchError, ValueError):
    """A physical parameter or model definition is out of its valid range."""


class ModelParseError(InvalidParameterError):
    """A custom model description could not be parsed."""


class ConfigError(DecayQuenchError, ValueError):
    """A run configuration is malformed, incomplete or inconsistent."""


class NumericalError(DecayQuenchError, RuntimeError):
    """A numerical routine (eigensolver, fit) failed."""
