"""Exception hierarchy.

Every numerical failure raised by the package derives from
:class:`NumericalFailure`; input problems derive from :class:`ValidationError`.
The CLI maps the two families to exit codes 3 and 2.
"""


class SineTypeError(Exception):
    """Base class for all package errors."""


class ValidationError(SineTypeError, ValueError):
    pass


class NumericalFailure(SineTypeError, ArithmeticError):
    pass


class UnsupportedDerivative(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class DegenerateMainPart(NumericalFailure):
    pass


class BoundaryTooClose(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class LeftTrustRegion(NumericalFailure):
    pass


class MaxIterations(NumericalFailure):
    pass


class CountMismatch(NumericalFailure):
    pass


class TailBoundExceeded(NumericalFailure):
    pass


class NearLatticePole(NumericalFailure):
    pass


class SlowConvergence(NumericalFailure):
    pass


class InsufficientZeros(ValidationError):
    pass


class IllConditioned(NumericalFailure):
    def __init__(self, message, frame=None):
        super().__init__(message)
        self.frame = frame


class FitDiverged(NumericalFailure):
    pass


class QuadratureTailTooLarge(NumericalFailure):
    pass


class BranchAmbiguity(NumericalFailure):
    pass
