"""Shared exception types."""


class DataError(Exception):
    """Bad input data: malformed files, unknown labels, contract violations.

    The CLI maps this to exit code 2.
    """


class UsageError(Exception):
    """Bad command-line usage. The CLI maps this to exit code 1."""
