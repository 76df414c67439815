"""Shared exception types.

ValidationError covers bad user input (CLI exits 2, HTTP 4xx); anything
else propagating out of the library is an internal error (CLI exit 1).
"""


class ValidationError(ValueError):
    """Input violates a documented contract."""


class UnknownTaskError(ValidationError):
    """A choice sheet refers to a task id that is not registered."""


class ConflictError(ValidationError):
    """An operation is invalid in the current state (duplicate or out of order)."""
