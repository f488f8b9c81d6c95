"""Exception hierarchy for the tapkin toolkit.

Every error raised by the library derives from :class:`TapkinError` so the
CLI can map library failures to exit code 2 uniformly.
"""


class TapkinError(Exception):
    """Base class for all tapkin errors."""


# --- landmark / annotation ingestion ---------------------------------------

class MalformedRecord(TapkinError):
    """A record in a landmark or annotation file could not be parsed."""

    def __init__(self, path, line_no, reason):
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{self.path}:{line_no}: {reason}")


class WrongPointCount(TapkinError):
    """A landmark frame does not carry exactly 21 points."""


class NonMonotoneTimestamps(TapkinError):
    """Frame timestamps decrease somewhere in the input."""


class EmptySeries(TapkinError):
    """An operation that needs samples received none."""


# --- signal conditioning -----------------------------------------------------

class TooFewSamples(TapkinError):
    """Not enough samples to resample or fit."""


class ZeroDuration(TapkinError):
    """Input samples span zero time."""


class BadWindow(TapkinError):
    """Smoothing window is even, too small, or longer than the signal."""


class OrderTooHigh(TapkinError):
    """Requested derivative order exceeds the fit polynomial order."""


class ConstantSignal(TapkinError):
    """Signal has no range; normalization is undefined."""


# --- cycle detection ----------------------------------------------------------

class NoDominantPeriod(TapkinError):
    """Autocorrelation shows no rhythmic structure."""


class TooFewCycles(TapkinError):
    """Fewer tap cycles than the analysis minimum."""


class NonAlternating(TapkinError):
    """Manual peak/valley annotations do not strictly alternate."""


class OutOfSpan(TapkinError):
    """An annotation time falls outside the signal span."""


# --- statistics ----------------------------------------------------------------

class LengthMismatch(TapkinError):
    """Paired series have different lengths."""


class ConstantTruth(TapkinError):
    """The reference series is constant; R^2 is undefined."""


class SampleTooSmall(TapkinError):
    """Sample below the minimum size for the test."""


class SampleTooLarge(TapkinError):
    """Sample above the supported size for the test."""


class AllEqual(TapkinError):
    """All sample values identical; the test statistic is undefined."""


class ConstantInput(TapkinError):
    """A correlation input has zero rank variance."""


class TooFewTargets(TapkinError):
    """ICC needs at least 3 targets."""


class MissingCells(TapkinError):
    """The ratings matrix has missing entries or mismatched subjects."""


class DegenerateRegression(TapkinError):
    """Regression abscissae are all equal."""


# --- synthesis ------------------------------------------------------------------

class ConfigInvalid(TapkinError):
    """A generator or degradation configuration violates its bounds."""


class UpsampleRequested(TapkinError):
    """Degradation target frame rate exceeds the source rate."""
