"""Shared exception hierarchy.

The CLI maps UsageError to exit code 2 and DataError to exit code 3; everything
else is a bug.
"""


class AlgoseekError(Exception):
    pass


class UsageError(AlgoseekError):
    """Bad command line or configuration (exit code 2)."""


class DataError(AlgoseekError):
    """Bad or missing input data (exit code 3)."""
