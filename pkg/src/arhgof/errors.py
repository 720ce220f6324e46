"""Exception types raised across the package."""


class ArhgofError(Exception):
    """Base class for package-specific errors."""


class DimensionError(ArhgofError, ValueError):
    """Incompatible array shapes or grids."""


class PreconditionError(ArhgofError, ValueError):
    """An operation's precondition was violated (e.g. non-centered sample)."""


class DegenerateSampleError(ArhgofError, ValueError):
    """Sample carries no usable variation (all-zero curves, zero eigenvalues)."""


class ConvergenceError(ArhgofError, RuntimeError):
    """Iterative solver hit its iteration cap; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class InstabilityError(ArhgofError, RuntimeError):
    """A simulated recursion diverged."""


class BlowUpError(ArhgofError, RuntimeError):
    """A simulated path became non-finite; carries the offending step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DomainError(ArhgofError, ValueError):
    """State outside a model's domain (e.g. x <= 0 for inverse drifts)."""


class IngestionError(ArhgofError, ValueError):
    """Tick data could not be turned into daily curves."""
