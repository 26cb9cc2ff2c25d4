"""Exception hierarchy shared by the library and the command line."""


class FlexiFuzzError(Exception):
    """Base class for all package errors."""


class DataError(FlexiFuzzError, ValueError):
    """Malformed or unusable input data (files, labels, manifests)."""


class SplitError(DataError):
    """A partition would contain a single class."""


class SingularSystemError(FlexiFuzzError, ArithmeticError):
    """The linear system is singular or numerically singular.

    ``pivot`` is the zero-based elimination step whose pivot fell below
    the threshold.
    """

    def __init__(self, message, pivot):
        super().__init__(message)
        self.pivot = pivot


class TrainingError(FlexiFuzzError, ArithmeticError):
    """Training failed for numerical reasons."""


class DegenerateStatisticError(FlexiFuzzError, ArithmeticError):
    """A test statistic has a non-positive denominator."""
