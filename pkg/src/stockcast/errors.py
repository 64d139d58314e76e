"""Exception hierarchy shared by every stockcast module."""


class StockcastError(Exception):
    """Base class for all errors raised by this package."""


class InputError(StockcastError, ValueError):
    """Bad input data or arguments (CLI exit code 2)."""


class SchemaError(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptySeriesError(InputError):
    pass


class OrderingError(InputError):
    pass


class SplitError(InputError):
    pass


class ShapeError(InputError):
    pass


class InsufficientDataError(InputError):
    pass


class ConflictError(InputError):
    pass


class ModelError(StockcastError):
    """Model fitting or numeric failure (CLI exit code 1)."""


class NumericError(ModelError, ArithmeticError):
    pass


class FitError(ModelError):
    pass


class ConvergenceError(ModelError):
    """Optimizer hit its iteration cap; ``best`` holds the best point seen."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SearchError(ModelError):
    pass


class DivergenceError(ModelError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class DegenerateModelError(ModelError):
    pass


class NetworkError(StockcastError):
    """Transport or HTTP failure while fetching data (CLI exit code 3)."""
