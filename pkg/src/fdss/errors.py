"""Exception hierarchy.

Validation problems (bad parameters, bad requests) derive from
:class:`ValidationError`; failures of a numerical procedure derive from
:class:`NumericalError`. The CLI maps the two families to exit codes 1 and 2.
"""


class FDSSError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(FDSSError, ValueError):
    pass


class NumericalError(FDSSError, ArithmeticError):
    pass


# parameter bounds
class NOutOfRange(ValidationError):
    pass


class MOutOfRange(ValidationError):
    pass


class SigmaOutOfRange(ValidationError):
    pass


class POutOfRange(ValidationError):
    pass


# exponent degeneracies
class DegenerateL(ValidationError):
    """p sits on p_L(sigma); the self-similar family degenerates to eternal solutions."""


class SupercriticalM(ValidationError):
    """The self-map needs m < m_c so that the radial exponent is negative."""


class PaperConstantsDegenerate(ValidationError):
    """The printed C1, C2 formulas are 0/0 at sigma = 0."""


class ConstantsOverflow(NumericalError):
    """C1 or C2 does not fit in double precision."""


# profiles
class NonPositiveF(ValidationError):
    pass


class NonPositiveProfile(ValidationError):
    pass


class BranchUnavailable(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class UnsupportedBehavior(ValidationError):
    pass


class InsufficientTail(NumericalError):
    pass


class GridTooCoarse(NumericalError):
    pass


# shooting
class BracketInvalid(ValidationError):
    pass


class NonMonotoneBoundary(NumericalError):
    """The outcome class changes more than once across a D scan."""

    def __init__(self, message, intervals=()):
        super().__init__(message)
        self.intervals = list(intervals)
