"""Exception types shared across the package."""


class MkgpError(Exception):
    """Base class for all package-specific errors."""


class DomainError(MkgpError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(MkgpError, ValueError):
    """A configuration file or option set failed validation."""


class DataError(MkgpError, ValueError):
    """Input data is malformed or inconsistent with the configuration."""


class NumericalError(MkgpError, RuntimeError):
    """A numerical procedure failed beyond its recovery strategies."""
