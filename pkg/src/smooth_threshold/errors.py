"""Shared exception and warning types."""


class InputError(ValueError):
    """Raised when user-supplied data, configuration, or file content is invalid."""


class NumericError(RuntimeError):
    """Raised when a numerical routine fails to reach its accuracy contract."""


class ConvergenceWarning(UserWarning):
    """Emitted when an iterative routine stops on a budget rather than its tolerance."""
