"""Exception hierarchy.

Configuration / input problems map to CLI exit code 2, numerical failures
to exit code 1.
"""


class TailhedgeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TailhedgeError):
    """Bad parameters, grids, config files or input data (exit code 2)."""


class ParameterError(ConfigurationError):
    """Model parameter outside its admissible domain."""


class DataError(ConfigurationError):
    """Malformed or insufficient input data."""


class NumericalError(TailhedgeError):
    """Runtime numerical failure (exit code 1)."""


class InstabilityError(NumericalError):
    """Time march blew up; carries the offending step index."""

    def __init__(self, step: int, norm: float):
        self.step = step
        self.norm = norm
        super().__init__(f"solution max-norm {norm:.3e} exceeded the blow-up "
                         f"threshold at step {step}")


class SingularSystemError(NumericalError):
    """Zero pivot in a banded solve; carries the row index."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"zero pivot encountered in row {row}")


class MassLossError(NumericalError):
    """Too much probability mass leaked through the grid boundary."""


class DegenerateSampleError(DataError):
    """Sample has zero variance where a spread is required."""


class InsolvencyError(TailhedgeError):
    """Hedged portfolio value went nonpositive."""
