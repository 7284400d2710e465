"""Exception hierarchy.

Every error raised by the library derives from :class:`OrbiMorseError`.
Errors that describe a mathematical property of the input (a degenerate
critical point, an inconsistent inequality) derive from :class:`DomainFailure`;
the CLI maps those to exit code 1 and everything else to exit code 2.
"""


class OrbiMorseError(Exception):
    pass


class InputError(OrbiMorseError):
    """Malformed input: files, matrices, expression text."""


class DomainFailure(OrbiMorseError):
    """The input is well formed but fails a mathematical requirement."""


# group_rep
class OrderExceeded(InputError):
    pass


class NotIsometry(InputError):
    pass


class LatticeNotPreserved(InputError):
    pass


class ActionNotComplexLinear(DomainFailure):
    pass


class PhaseNotRational(DomainFailure):
    pass


# expr
class ExprSyntaxError(InputError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class UnknownIdentifier(ExprSyntaxError):
    pass


class VariableOutOfRange(ExprSyntaxError):
    pass


class DomainError(DomainFailure):
    """Expression evaluated outside its domain (division by zero, sqrt < 0)."""


# critical
class NoSeeds(InputError):
    pass


class NonFiniteFunctionValue(DomainFailure):
    pass


class NotInvariant(InputError):
    pass


class DegenerateCriticalPoint(DomainFailure):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class SplitNotInvariant(DomainFailure):
    pass


# morse_poly
class MissingComplexStructure(DomainFailure):
    pass


# inequalities
class RationalExponents(DomainFailure):
    pass


class NotLacunary(DomainFailure):
    pass


class OddDegreePresent(DomainFailure):
    pass


class InconsistentInequality(DomainFailure):
    pass


# flowlab
class NearCriticalSingularity(DomainFailure):
    pass


class StepFailure(DomainFailure):
    pass
