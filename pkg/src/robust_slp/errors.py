"""Exception hierarchy.

Every error raised on purpose by this package derives from :class:`SlpError`,
which is itself a :class:`ValueError` so that callers validating user input
can catch the standard type.
"""


class SlpError(ValueError):
    """Base class for all package errors."""


class InvalidModulationError(SlpError):
    """Unsupported modulation order (PSK needs M >= 3)."""


class UnsupportedConstellationError(SlpError):
    """Constellation has no CI-region description for the requested point."""


class DomainError(SlpError):
    """Argument outside the mathematical domain of a function."""


class SingularGramError(SlpError):
    """A 2x2 Gram matrix is not (numerically) symmetric positive definite."""


class DegenerateWhiteningError(SlpError):
    """Whitening requested for a zero transmit vector or zero error variance."""


class MalformedProblemError(SlpError):
    """Conic problem data with inconsistent dimensions or cone description."""


class ConfigError(SlpError):
    """Invalid scenario configuration. ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
