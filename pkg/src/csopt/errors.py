"""Exception types shared across the package."""


class CsoptError(Exception):
    """Base class for all csopt errors."""


class InvalidInputError(CsoptError, ValueError):
    """Raised when arguments violate a documented precondition."""


class DegenerateConstraintError(CsoptError):
    """Raised when the constraint block loses rank (singular G H_pp G^T)."""


class StepFailureError(CsoptError):
    """Raised when a Newton stage fails to converge within its budget.

    Carries the last constraint residual and the number of iterations spent.
    """

    def __init__(self, message: str, residual: float | None = None,
                 iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
