"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto its scripting contract (2 = assumption, 3 = numerical,
4 = I/O) without a lookup table.
"""


class RegsynError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 3


# -- numerical -------------------------------------------------------------

class NumericalError(RegsynError):
    exit_code = 3


class NotHermitian(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class DimensionMismatch(NumericalError):
    pass


class Singular(NumericalError):
    pass


class BoundViolated(NumericalError):
    pass


class KernelNotOneDimensional(NumericalError):
    pass


class PoleHit(NumericalError):
    pass


class NotInHinf(NumericalError):
    pass


class ZeroNumerator(NumericalError):
    pass


class DegreeZero(NumericalError):
    pass


class DegreeCapExceeded(NumericalError):
    pass


class NotAZero(NumericalError):
    pass


class DegenerateDerivative(NumericalError):
    pass


class NotSolvable(NumericalError):
    pass


class NumericalBreakdown(NumericalError):
    pass


class ContourThroughZero(NumericalError):
    pass


class CountMismatch(NumericalError):
    pass


class DegenerateNormalizer(NumericalError):
    pass


class SingularAtBoundary(NumericalError):
    pass


class BoundaryConditionTooLarge(NumericalError):
    pass


class InterpolationResidualTooLarge(NumericalError):
    pass


class InternalModelMissing(NumericalError):
    pass


class PBHFailure(NumericalError):
    pass


class GridMisaligned(NumericalError):
    pass


# -- modelling assumptions -------------------------------------------------

class AssumptionViolated(RegsynError):
    """A standing assumption on the plant does not hold.

    Parameters
    ----------
    message : str
        Human readable summary.
    report : dict, optional
        Structured outcome of the individual checks, keyed by label.
    """

    exit_code = 2

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class MultiplicityDetected(AssumptionViolated):
    pass


class RepeatedUnstablePole(AssumptionViolated):
    pass


# -- input / output --------------------------------------------------------

class ParseError(RegsynError):
    exit_code = 4
