"""Symbol-temporal consistency self-supervised learning for time series."""

from .errors import DataError, NumericalError

__all__ = ["DataError", "NumericalError"]
__version__ = "0.1.0"
