"""Exception hierarchy shared by all modules."""


class DivzetaError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(DivzetaError, ValueError):
    pass


class OutOfRangeError(DivzetaError, ValueError):
    """An argument falls outside the range covered by a table or curve."""


class ResourceLimitError(DivzetaError):
    """A request would exceed the configured memory or work budget."""


class FitFailureError(DivzetaError):
    """Least-squares fit is ill-conditioned or violates a required sign.

    ``diagnostics`` carries whatever the caller needs to see why.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class QuadratureFailureError(DivzetaError):
    def __init__(self, message, discrepancy):
        super().__init__(message)
        self.discrepancy = float(discrepancy)


class CacheInvalidError(DivzetaError):
    """Cache file has wrong magic, version, kind, limit, or is truncated."""
