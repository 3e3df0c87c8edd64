"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage problems are handled by argparse,
FormatError/DataError exit with 2, NumericError (training divergence,
undefined statistics) with 3.
"""


class VggMetricError(Exception):
    pass


class PreconditionError(VggMetricError, ValueError):
    """An operation was called with arguments violating its contract."""


class FormatError(VggMetricError):
    """A file or byte stream does not conform to its declared format."""


class DataError(VggMetricError):
    """Dataset contents are inconsistent (missing files, size mismatches)."""


class NumericError(VggMetricError):
    """A numeric procedure failed (divergence, undefined statistic)."""


class TrainingError(NumericError):
    """Gradient descent diverged; carries the failing iteration."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class UndefinedStatisticError(NumericError):
    """A rank statistic is undefined for the given input (e.g. constant list)."""
