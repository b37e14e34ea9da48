"""Exception types shared across the package."""


class DomainError(ValueError):
    """An index, ordinal or operand lies outside its admissible range."""


class ConfigurationError(ValueError):
    """Invalid run or grid configuration."""


class DataError(ValueError):
    """Input data contain non-finite or otherwise unusable values."""


class PreconditionError(ValueError):
    """A mathematical precondition of an operation does not hold."""


class SolverError(RuntimeError):
    """A linear solve could not be carried out (e.g. factorisation out of memory)."""


class ConvergenceError(SolverError):
    """An iterative solver stopped before reaching its tolerance.

    Attributes
    ----------
    residual : float
        Relative residual achieved when the solver gave up.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
