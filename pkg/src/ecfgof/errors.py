"""Exception hierarchy shared by the library and the command line."""


class NumericalError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class ConvergenceError(NumericalError):
    def __init__(self, message, iterations):
        super().__init__(f"{message} (after {iterations} sweeps)")
        self.iterations = iterations


class NearSingularError(NumericalError):
    """Matrix too close to singular for the requested operation."""


class EstimationError(NumericalError):
    """Parameter estimation failed, typically a singular sample covariance."""


class DataFormatError(ValueError):
    """Malformed input data; carries the offending row/column when known."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} at {', '.join(where)}"
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(ValueError):
    """Invalid experiment or command line configuration."""
