"""Exception hierarchy shared by every module.

Each class name doubles as the machine-readable ``error`` tag emitted by the CLI.
"""


class SuperAlgebraError(Exception):
    """Base class for all domain errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


class GeneratorCountMismatch(SuperAlgebraError):
    pass


class NonInvertible(SuperAlgebraError):
    pass


class NonNilpotent(SuperAlgebraError):
    pass


class OddArgument(SuperAlgebraError):
    pass


class ParityError(SuperAlgebraError):
    pass


class IncompatibleKinds(SuperAlgebraError):
    pass


class SubstitutionDiverges(SuperAlgebraError):
    pass


class NotInSpan(SuperAlgebraError):
    pass


class NonTerminating(SuperAlgebraError):
    pass


class DegenerateLeadingCoefficient(SuperAlgebraError):
    pass


class NotSuperconformal(SuperAlgebraError):
    pass


class FlavorMismatch(SuperAlgebraError):
    pass


class NonInvertibleDenominator(SuperAlgebraError):
    pass


class ExtractionFailed(SuperAlgebraError):
    pass


class ParityMismatch(SuperAlgebraError):
    pass


class OutOfSpan(SuperAlgebraError):
    pass


class IndexOutOfWindow(SuperAlgebraError):
    pass


class InvalidSphere(SuperAlgebraError):
    pass
