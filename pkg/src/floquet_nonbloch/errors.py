"""Exception hierarchy shared by the numerical modules and the CLI."""


class FloquetNonBlochError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FloquetNonBlochError, ValueError):
    """An argument lies outside the domain of an operation (e.g. beta = 0)."""


class ConfigError(FloquetNonBlochError, ValueError):
    """Unknown model, missing parameter, or otherwise invalid run configuration."""


class ConditioningError(FloquetNonBlochError, ArithmeticError):
    """A numerically reconstructed object failed its self-check."""


class ConvergenceError(FloquetNonBlochError, RuntimeError):
    """An iterative procedure did not converge.

    The best available intermediate result is attached as ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class BracketError(FloquetNonBlochError, ValueError):
    """A search bracket does not straddle the event being located."""


class PrecisionError(FloquetNonBlochError, ArithmeticError):
    """Eigenvalue enclosures stayed too wide at the maximum working precision."""
