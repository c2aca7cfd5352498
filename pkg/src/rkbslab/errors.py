"""Exception hierarchy shared by every rkbslab module."""


class RKBSLabError(ValueError):
    """Base class for all library errors."""


class DimensionError(RKBSLabError):
    pass


class UnsupportedFamily(RKBSLabError):
    pass


class EmptyInputError(RKBSLabError):
    pass


class UnsupportedExponent(RKBSLabError):
    pass


class AlignmentError(RKBSLabError):
    pass


class NotAbsolutelyContinuous(RKBSLabError):
    pass


class UnsupportedLoss(RKBSLabError):
    pass


class PartitionNotCovering(RKBSLabError):
    pass


class BudgetExceeded(RKBSLabError):
    pass


class NotRepresentable(RKBSLabError):
    """Raised when a target is not in the range of the synthesis operator.

    ``residual`` is the least-squares residual norm of the best fit.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class SolverFailure(RKBSLabError):
    """A norm was requested but the solver stopped short of a certified optimum."""

    def __init__(self, message: str, status: str = "max_iters"):
        super().__init__(message)
        self.status = status
