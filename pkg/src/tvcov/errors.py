"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration/parameter problems exit 2,
data ingestion problems exit 3, numerical failures exit 4.
"""


class TvcovError(Exception):
    """Base class for all package errors."""


class ConfigError(TvcovError):
    """Invalid configuration (bad field values, unknown options)."""


class ParameterError(ConfigError):
    """Invalid argument passed to a library operation."""


class ExtrapolationError(ParameterError):
    """Spline query outside the knot range."""


class DataError(TvcovError):
    """Problems with input data files or their contents."""


class PanelFormatError(DataError):
    """CSV panel fails parsing or validation."""


class AlignmentError(DataError):
    """Labels of paired files do not match."""


class NumericError(TvcovError):
    """Numerical failure inside an estimator."""


class SingularityError(NumericError):
    """A matrix required to be positive definite is not."""

    def __init__(self, message: str, lambda_min: float | None = None):
        if lambda_min is not None:
            message = f"{message} (lambda_min={lambda_min:.6e})"
        super().__init__(message)
        self.lambda_min = lambda_min


class ConditioningError(NumericError):
    """A linear system is too ill-conditioned to solve reliably."""

    def __init__(self, message: str, lambda_min: float | None = None):
        if lambda_min is not None:
            message = f"{message} (lambda_min={lambda_min:.6e})"
        super().__init__(message)
        self.lambda_min = lambda_min


class DegenerateBasisError(NumericError):
    """A sieve basis cannot be built (e.g. constant characteristic)."""


class FitError(NumericError):
    """A least-squares fit failed (rank-deficient design)."""


class DefinitenessError(NumericError):
    """A quadratic form that must be positive is not."""
