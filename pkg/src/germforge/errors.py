"""Exception hierarchy shared by all germforge modules.

Errors fall into two families that the CLI maps to distinct exit codes:
``InputError`` (bad arguments, malformed expressions, violated
preconditions) and ``NumericalError`` (iterations that failed to converge,
ill-conditioned solves).
"""


class GermforgeError(Exception):
    """Base class for every error raised by the package."""


class InputError(GermforgeError, ValueError):
    pass


class NumericalError(GermforgeError, ArithmeticError):
    pass


class ExprSyntaxError(InputError):
    def __init__(self, position: int, expected: str, text: str = ""):
        self.position = position
        self.expected = expected
        self.text = text
        pointer = ""
        if text:
            pointer = f"\n  {text}\n  {' ' * position}^"
        super().__init__(f"syntax error at position {position}: expected {expected}{pointer}")


class SemanticError(InputError):
    pass


class OutOfDomain(InputError):
    pass


class NewtonDivergence(NumericalError):
    pass


class OrderMismatch(InputError):
    pass


class NotInvertible(NumericalError):
    pass


class InvalidWord(InputError):
    pass


class InvalidOrders(InputError):
    pass


class TorsionViolated(InputError):
    pass


class EvaluationFailure(NumericalError):
    pass


class ResolutionTooCoarse(InputError):
    pass


class GeometryError(InputError):
    pass


class SolverFailure(NumericalError):
    pass


class NonRealRatio(NumericalError):
    pass


class JetExtractionFailure(NumericalError):
    pass


class NotARelation(InputError):
    pass


class NoUniqueMaximum(InputError):
    pass


class PerturbationExhausted(NumericalError):
    pass
