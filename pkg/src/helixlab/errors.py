"""Exception hierarchy.

Each class maps onto one CLI exit status (see :mod:`helixlab.cli`).
"""


class HelixLabError(Exception):
    exit_code = 4


class InputError(HelixLabError, ValueError):
    """Malformed input file or expression."""

    exit_code = 2


class ExpressionError(InputError):
    pass


class InsufficientSamples(InputError):
    pass


class DegenerateCurve(HelixLabError):
    """The curve violates a regularity or nondegeneracy assumption."""

    exit_code = 3

    def __init__(self, message, s=None, index=None):
        super().__init__(message)
        self.s = s
        self.index = index


class NonRegularCurve(DegenerateCurve):
    pass


class DegenerateJet(DegenerateCurve):
    pass


class CurvatureVanishes(DegenerateCurve):
    pass


class NumericalError(HelixLabError):
    exit_code = 4


class OrderTooHigh(NumericalError, ValueError):
    pass


class OutOfDomain(NumericalError, ValueError):
    pass


class NotOrthogonal(NumericalError, ValueError):
    pass


class PreconditionError(NumericalError, ValueError):
    pass


class AxisUnstable(NumericalError):
    pass


class AmbiguousNullspace(NumericalError):
    pass


class StepFailure(NumericalError):
    pass


class CExcluded(NumericalError, ValueError):
    pass


class DomainViolation(HelixLabError, ValueError):
    exit_code = 5

    def __init__(self, message, s=None):
        super().__init__(message)
        self.s = s


class IntervalContainsCurvatureZero(DomainViolation):
    pass
