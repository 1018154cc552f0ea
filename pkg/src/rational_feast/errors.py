"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a function is defined."""


class FilterConstructionError(RuntimeError):
    """A rational filter could not be built to the required accuracy."""


class PoleProximityError(ValueError):
    """A filter was evaluated too close to one of its poles."""


class SingularShiftError(ArithmeticError):
    """The shifted matrix ``z*B - A`` is singular or numerically so."""

    def __init__(self, z, message=None):
        self.z = z
        super().__init__(message or f"shifted system is singular at z = {z!r}")


class RankDeficiencyWarning(RuntimeWarning):
    """The reduced mass matrix lost rank and the subspace was truncated."""


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class InsufficientDataError(ValueError):
    """Not enough iterations were recorded to estimate a rate."""
