"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: DataError -> 3, NumericError -> 4.
"""


class StackIqaError(Exception):
    """Base class for all errors raised by this package."""


class DataError(StackIqaError):
    """Bad or missing input data: manifests, caches, scores, images."""


class NumericError(StackIqaError):
    """A numeric procedure failed (singular matrix, non-convergence, ...)."""
