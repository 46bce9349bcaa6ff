"""Exception types shared across the package."""


class SvsetError(Exception):
    """Base class for all library errors."""


class MalformedInputError(SvsetError, ValueError):
    pass


class DimensionMismatchError(SvsetError, ValueError):
    pass


class DegeneracyError(SvsetError, ValueError):
    """Raised when an operation needs a full-dimensional polytope or fan."""


class NumericalFailureError(SvsetError, RuntimeError):
    """Iterative routine did not converge.

    ``bound`` holds the best certified interval ``(lower, upper)`` reached.
    """

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class FanError(SvsetError, ValueError):
    """Fan does not satisfy the structural hypotheses of an operation."""


class AdmissibilityError(SvsetError, ValueError):
    def __init__(self, message, time_index=None):
        super().__init__(message)
        self.time_index = time_index


class EnumerationGuardError(SvsetError, ValueError):
    pass
