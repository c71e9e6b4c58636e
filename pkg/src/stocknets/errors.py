"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class StocknetsError(Exception):
    """Base class for all package errors."""


class UsageError(StocknetsError):
    """Bad command-line arguments or configuration."""


class DataError(StocknetsError):
    """Malformed or invalid input data."""


class NumericalError(StocknetsError):
    """Numerical failure: non-convergence, undefined quantity, bad conditioning."""
