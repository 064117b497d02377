"""Exception hierarchy shared by all modules.

Every error raised on purpose by the package derives from ``ConvNormError``,
which lets the command line map failures onto distinct exit codes.
"""


class ConvNormError(Exception):
    """Base class for deliberate failures."""


class DomainError(ConvNormError, ValueError):
    """A scalar argument lies outside the domain of the operation."""


class InfeasibleExponentsError(DomainError):
    """The exponents do not satisfy Young's relation with r in (1, inf)."""


class GridMismatchError(ConvNormError, ValueError):
    """Two grid functions live on different grids."""


class ZeroFunctionError(ConvNormError, ValueError):
    """An operation that needs a nonzero function received zero."""


class DegenerateConvolutionError(ZeroFunctionError):
    """k * f vanishes identically, so f is outside the domain of B."""


class DegenerateWindowError(ConvNormError, ValueError):
    """The requested near-support does not exist (delta exceeds the mass)."""


class PreconditionError(ConvNormError, ValueError):
    """Inputs violate a stated precondition (measured, not structural)."""


class ParametersInfeasibleError(PreconditionError):
    """The derived concentration parameters make the estimate void."""


class MonotonicityError(ConvNormError, ArithmeticError):
    """The norm history decreased by more than the floating slack."""


class ResolutionError(ConvNormError, ValueError):
    """The grid cannot resolve the requested chirp."""


class CrossCheckError(ConvNormError, ArithmeticError):
    """The direct-quadrature cross-check did not converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ValidatorFailedError(ConvNormError, AssertionError):
    """A numerical inequality validator found a counterexample."""

    def __init__(self, message, counterexample=None):
        super().__init__(message)
        self.counterexample = counterexample
