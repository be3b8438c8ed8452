"""Exception hierarchy for drhpe.

Exit codes used by the command line driver are attached to the classes so
the controller can map a failure to a process status without a lookup table.
"""


class DrhpeError(Exception):
    """Base class of all drhpe errors."""

    exit_code = 1


class DimensionMismatchError(DrhpeError, ValueError):
    """Vector or operator dimensions do not agree."""

    exit_code = 4


class PsdViolationError(DrhpeError, ValueError):
    """A quadratic form that should be nonnegative is negative beyond tolerance."""

    exit_code = 4


class SingularSystemError(DrhpeError, ArithmeticError):
    """A linear system that must be uniquely solvable is singular."""

    exit_code = 4


class SubproblemConfigurationError(DrhpeError, ValueError):
    """No subproblem strategy applies to the requested combination."""

    exit_code = 4


class UnsupportedFunctionError(DrhpeError, ValueError):
    """A function kind does not support the requested operation."""

    exit_code = 4


class InstanceFormatError(DrhpeError, ValueError):
    """Problem instance document is malformed."""

    exit_code = 4


class ConfigError(DrhpeError, ValueError):
    """Solver configuration violates a hypothesis of the method."""

    exit_code = 4


class InvalidPenaltyError(ConfigError):
    """Penalty parameter beta must be positive."""


class InvalidToleranceError(ConfigError):
    """Tolerance rho must be positive."""


class InvalidProximalFactorError(ConfigError):
    """Proximal factor alpha must be nonnegative."""


class StepsizeOutOfDomainError(ConfigError):
    """Stepsize theta outside (0, (1 - alpha + sqrt(alpha^2 + 6 alpha + 5)) / 2)."""


class NonConvergenceError(DrhpeError, RuntimeError):
    """Iteration or cycle limit reached before the stopping test passed.

    Args:
        message: description of the exhausted limit
        trace: the partial trace or step history recorded so far
        iterations: iterations performed before the limit, whether or not
            they were recorded in trace
    """

    exit_code = 2

    def __init__(self, message: str, trace=None, iterations: int = 0):
        super().__init__(message)
        self.trace = trace
        self.iterations = iterations


class RegimeError(DrhpeError, ValueError):
    """Analysis constants requested outside the regime where they exist."""

    exit_code = 4


class TheoryViolationError(DrhpeError, RuntimeError):
    """A quantity the analysis proves to exist could not be found."""

    exit_code = 3


class MissingWitnessError(DrhpeError, ValueError):
    """An iterate record lacks the subgradient witnesses a check needs."""

    exit_code = 3


class CertificationError(DrhpeError, RuntimeError):
    """One or more certification checks failed."""

    exit_code = 3


class InsufficientDataError(DrhpeError, ValueError):
    """Not enough records to fit a complexity slope."""

    exit_code = 4
