"""Exception types shared across the package."""


class ModradarError(Exception):
    """Base class for package errors."""


class UsageError(ModradarError, ValueError):
    """Invalid arguments or inconsistent inputs."""


class ResourceError(ModradarError):
    """A requested build would exceed the configured node budget."""

    def __init__(self, message, actual_n=None):
        super().__init__(message)
        self.actual_n = actual_n


class DomainError(ModradarError, ValueError):
    """A cost function was not finite somewhere on the search domain."""


class FitError(ModradarError, ValueError):
    """Least-squares fit could not be computed (degenerate design)."""
