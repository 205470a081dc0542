"""Exception types raised across the toolkit.

Everything derives from :class:`EventcastError` so callers can catch the
whole family with one clause; most are also ``ValueError`` subclasses
because they signal bad inputs rather than internal faults.
"""


class EventcastError(Exception):
    """Base class for all toolkit errors."""


class NonPositiveValue(EventcastError, ValueError):
    """Log / Box-Cox transform met a value outside its domain."""


class DomainError(EventcastError, ValueError):
    """Inverse transform would leave the real domain."""


class SeriesTooShort(EventcastError, ValueError):
    """Series has too few observations for the requested operation."""


class HeadLengthMismatch(EventcastError, ValueError):
    """Integration head does not supply exactly d + D*m values."""


class LagTooLarge(EventcastError, ValueError):
    """Requested autocorrelation lag exceeds what the series supports."""


class MissingDates(EventcastError, ValueError):
    """Ingested daily data has gaps."""

    def __init__(self, message: str, first_missing=None):
        super().__init__(message)
        self.first_missing = first_missing


class UnknownEventType(EventcastError, ValueError):
    """Event type is not one of the recognised calendar event kinds."""


class RangeOutsideCalendar(EventcastError, ValueError):
    """Requested encoding range is not covered by the calendar."""


class DateMismatch(EventcastError, ValueError):
    """Two design matrices cover different date ranges."""


class NonInvertibleEstimate(EventcastError, ValueError):
    """Fitted ARMA polynomials ended outside the stationary/invertible region."""


class SingularDesign(EventcastError, ValueError):
    """Exogenous regressor columns are collinear."""


class MissingFutureCovariates(EventcastError, ValueError):
    """Forecast requires future covariate rows that were not supplied."""


class ColumnMismatch(EventcastError, ValueError):
    """Covariate columns do not match the columns seen in training."""


class AllFitsFailed(EventcastError, RuntimeError):
    """Every candidate order in a selection grid failed to fit."""


class LengthMismatch(EventcastError, ValueError):
    """Paired vectors have different lengths."""


class DegenerateInput(EventcastError, ValueError):
    """All feature rows are identical; no split can separate the targets."""


class EmptyData(EventcastError, ValueError):
    """Training data is empty."""


class InsufficientUniqueValues(EventcastError, ValueError):
    """Covariate has fewer unique values than the requested basis size."""


class SingularSystem(EventcastError, ValueError):
    """Penalized normal equations are singular."""


class MissingCovariate(EventcastError, ValueError):
    """Prediction data lacks a covariate used in training."""


class DimensionMismatch(EventcastError, ValueError):
    """Vector or matrix shapes are inconsistent."""


class TooFewRows(EventcastError, ValueError):
    """Not enough rows to split into training and validation sets."""


class HistoryTooShort(EventcastError, ValueError):
    """History is shorter than the model's sliding window."""


class NegativeValue(EventcastError, ValueError):
    """Metric input contains a negative value where only >= 0 is allowed."""


class ZeroDenominator(EventcastError, ValueError):
    """Scaling series is constant; the scaled error is undefined."""


class ZeroActual(EventcastError, ValueError):
    """Actuals contain a zero; percentage error is undefined."""


class WindowMismatch(EventcastError, ValueError):
    """Scenario calendars do not span the same simulation window."""
