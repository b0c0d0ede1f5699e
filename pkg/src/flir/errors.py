"""Exception hierarchy shared across the package."""


class FlirError(Exception):
    """Base class for all errors raised by ``flir``."""


class DomainError(FlirError, ValueError):
    """A grid point or argument lies outside the admissible domain."""


class AliasingError(FlirError, ValueError):
    """The sampling grid is too coarse for the requested support bound."""


class ParameterError(FlirError, ValueError):
    """A model or tuning parameter is out of range."""


class InvariantError(FlirError, ValueError):
    """A structural invariant of a spectrum, sample or estimate is violated."""


class DegenerateEndogeneityError(FlirError, ValueError):
    """Endogeneity was requested but the regressor has no component orthogonal to the instrument."""


class InfeasibleBalanceError(FlirError, RuntimeError):
    """No cut-off frequency brackets the balancing sum within the allowed factor."""

    def __init__(self, message, best_sum=None, best_kstar=None):
        super().__init__(message)
        self.best_sum = best_sum
        self.best_kstar = best_kstar


class ConfigError(FlirError, ValueError):
    """An experiment or CLI configuration failed validation."""


class ConsistencyWarning(UserWarning):
    """The threshold decays too fast for the generic consistency guarantee."""
