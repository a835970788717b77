"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: precondition violations exit with 3,
numeric and resource failures with 4, configuration problems with 2.
"""


class FkheatError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FkheatError):
    """Unparseable or inconsistent experiment configuration."""

    exit_code = 2


class PreconditionError(FkheatError, ValueError):
    """An operation was called outside its documented domain."""

    exit_code = 3


class DomainError(PreconditionError):
    """An argument lies outside the mathematical domain of an operation."""


class CoverageError(PreconditionError):
    """A sampled field or path does not cover the times/sites required."""


class TableLookupError(PreconditionError):
    """A tabulated covariance was queried at a point outside its site set."""


class NumericError(FkheatError):
    """A numeric procedure failed (divergence, loss of positivity, ...)."""

    exit_code = 4


class CovarianceError(NumericError):
    """A covariance matrix is not positive semidefinite beyond jitter."""


class GenerationError(NumericError):
    """All available exact sampling methods failed for a Gaussian object."""


class EstimationError(NumericError):
    """A Monte Carlo estimate is unusable (too many excluded replications)."""


class FitError(NumericError):
    """A regression/fit could not be performed on the supplied estimates."""


class ResourceError(FkheatError):
    """A configured resource cap would be exceeded."""

    exit_code = 4
