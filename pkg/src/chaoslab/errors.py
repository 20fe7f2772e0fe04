"""Exception types shared across the package."""


class ChaosLabError(Exception):
    """Base class for errors raised by chaoslab."""


class DomainError(ChaosLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularityError(DomainError):
    """Evaluation requested at a singular point (typically the origin of the torus)."""


class ResolutionError(DomainError):
    """A grid or radius schedule is too coarse for the requested quantity."""


class ConfigError(ChaosLabError, ValueError):
    """An experiment configuration is invalid; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key
