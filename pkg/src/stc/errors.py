"""Exception types shared across the package."""


class DataError(Exception):
    """Bad or inconsistent input data: shapes, missing files, malformed rows."""


class NumericalError(Exception):
    """Numerical failure: non-finite values, degenerate vectors, diverged training."""
