"""Exception types shared across the package."""


class EdgewalkError(Exception):
    """Base class for all package errors."""


class PreconditionError(EdgewalkError, ValueError):
    """An input violates the documented precondition of an operation."""


class NonConvergenceError(EdgewalkError, ArithmeticError):
    """An iterative solver hit its iteration cap."""


class NearSingularResolventError(EdgewalkError, ArithmeticError):
    """A resolvent was requested at (or numerically at) a pole."""
