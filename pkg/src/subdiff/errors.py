"""Exception types shared across the package."""


class SubdiffError(Exception):
    """Base class for all package errors."""


class DomainError(SubdiffError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class PreconditionError(SubdiffError, ValueError):
    """Structured inputs (paths, grids) violate a documented precondition."""


class NumericError(SubdiffError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target.

    Carries whatever diagnostic values the procedure produced so callers
    can inspect the disagreement.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = dict(details)


class SamplingError(SubdiffError, RuntimeError):
    """A rejection or bracketing loop exceeded its trial budget."""


class UnsupportedModelError(SubdiffError, ValueError):
    """The model violates a standing assumption of the requested operation."""


class ConfigError(SubdiffError, ValueError):
    """An experiment configuration is malformed or inconsistent."""


class DegenerateCoefficientError(SubdiffError, ValueError):
    """A joint-transform recursion level has a vanishing coefficient sum."""
