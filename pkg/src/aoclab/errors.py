"""Exception hierarchy shared by all modules."""


class AoclabError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(AoclabError):
    """Configuration violates an invariant or a precondition."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class DomainError(AoclabError, ValueError):
    """Argument outside the domain of an operation (e.g. E <= 0 for scattering)."""


class NumericalError(AoclabError, ArithmeticError):
    """An iterative method failed or a numerical invariant was violated."""


class InsufficientDataError(AoclabError):
    """Too few finite data points to perform a fit or comparison."""
