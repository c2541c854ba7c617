"""Exception hierarchy; the CLI maps these onto exit codes."""


class McvarError(Exception):
    """Base class for all package errors."""


class ValidationError(McvarError):
    """Malformed or inconsistent input data / parameters (CLI exit 2)."""


class DegenerateChainError(ValidationError):
    """Chain has a zero-variance component or is otherwise degenerate."""


class NumericalError(McvarError):
    """A numerical routine failed (CLI exit 3)."""


class ConvergenceError(NumericalError):
    """Iterative solver hit its cap; carries the best iterate found."""

    def __init__(self, message, iterate=None, residual=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual
