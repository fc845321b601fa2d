"""Exception types shared across the pipeline."""


class DedicomError(Exception):
    """Base class for all errors raised by this package."""


class InputError(DedicomError, ValueError):
    """Invalid or degenerate input (bad shapes, empty corpus, duplicate ids)."""


class NumericError(DedicomError, ArithmeticError):
    """A computation produced NaN/Inf or a solver failed to converge."""


class NetworkError(DedicomError):
    """Article retrieval failed and no cached copy was available."""


class NotFoundError(DedicomError, LookupError):
    """The requested article does not exist."""

    def __init__(self, title, message=None):
        self.title = title
        super().__init__(message or f"article not found: {title!r}")
