"""Exception hierarchy shared by the library and the command line front end."""


class GausstestError(Exception):
    """Base class for all errors raised by gausstest."""


class DomainError(GausstestError, ValueError):
    """An argument lies outside the domain of a numerical kernel."""


class ConfigurationError(GausstestError, ValueError):
    """Inconsistent or illegal parameters (CLI exit code 2)."""


class DataError(GausstestError, ValueError):
    """Malformed or unusable input data (CLI exit code 3)."""


class DegenerateColumnError(DataError):
    """A data column has fewer than two distinct values."""

    def __init__(self, column, block=None):
        self.column = column
        self.block = block
        where = f" of block {block}" if block else ""
        super().__init__(f"column {column}{where} is constant; cannot rank-transform it")


class TrainingDivergedError(GausstestError, RuntimeError):
    """Network training produced a non-finite loss."""
