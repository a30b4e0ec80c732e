"""Exception hierarchy shared across the package.

Exit-code mapping for the CLI: usage errors -> 1, DataError -> 2,
BackendError -> 3.
"""


class DivsampleError(Exception):
    """Base class for all package errors."""


class DataError(DivsampleError):
    """Malformed or contract-violating input data."""


class BackendError(DivsampleError):
    """Generation backend unreachable or persistently failing."""


class NoKneeError(DivsampleError):
    """The trace has no detectable curvature (e.g. an exact straight line)."""
