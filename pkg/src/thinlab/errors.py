"""Exception hierarchy shared by all thinlab modules."""


class ThinlabError(Exception):
    """Base class for every error raised by thinlab."""


class ParameterError(ThinlabError, ValueError):
    """A parameter lies outside its natural domain."""


class ConfigError(ThinlabError, ValueError):
    """A numerical configuration value (truncation budget, grid step, ...) is invalid."""


class InvalidDistributionError(ThinlabError, ValueError):
    """A distribution fails its invariants where a valid one is required."""


class DegreeError(ThinlabError, ValueError):
    """A polynomial degree exceeds the supported or cached maximum."""


class RangeError(ThinlabError, OverflowError):
    """A computation would overflow double precision."""

    def __init__(self, message, safe_limit=None):
        super().__init__(message)
        self.safe_limit = safe_limit


class DomainError(ThinlabError, ValueError):
    """A mean value or parameter is outside the achievable domain."""


class InfeasibleError(ThinlabError, ValueError):
    """Moment targets cannot be met by any tilt on the working window."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class NonexistenceError(ThinlabError, ValueError):
    """No minimum-information distribution exists for the requested constraint.

    Raised for a single Charlier constraint of degree k >= 2 with a strictly
    positive target: the infimum of the divergence is 0 but is not attained.
    """


class ConvergenceError(ThinlabError, RuntimeError):
    """An iterative solver stopped without meeting its tolerance."""

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class UnsupportedError(ThinlabError, ValueError):
    """The input lacks the structure an operation needs (e.g. no detectable kappa)."""


class PreconditionError(ThinlabError, ValueError):
    """An input violates a documented precondition of a check."""
