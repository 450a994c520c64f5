"""Exception types shared across the package."""


class CayleywalkError(Exception):
    """Base class for all package errors."""


class PresentationError(CayleywalkError, ValueError):
    """Invalid group presentation parameters (k, r)."""


class InvalidLetterError(CayleywalkError, ValueError):
    """Letter code outside [0, d)."""


class WordError(CayleywalkError, ValueError):
    """Word is not reduced or contains invalid letters."""


class NoParentError(CayleywalkError, ValueError):
    """The root has no parent."""


class EnvSpecError(CayleywalkError, ValueError):
    """Invalid environment family parameters."""


class ParameterError(CayleywalkError, ValueError):
    """Out-of-range numeric parameter (e.g. the flow decay rate)."""


class SpeedConditionError(CayleywalkError, ValueError):
    """Ellipticity floor too small for the positive-speed bound to apply."""


class A2ViolatedError(CayleywalkError, RuntimeError):
    """A zero transition probability was hit, i.e. the log-moment
    assumption fails for this environment."""


class BudgetExceededError(CayleywalkError, RuntimeError):
    """Truncated tree larger than the configured vertex budget."""


class ConfigError(CayleywalkError, ValueError):
    """Malformed run configuration."""
