"""Exception hierarchy for shiftscope."""


class ShiftscopeError(Exception):
    """Base class for all shiftscope errors."""


class FormatError(ShiftscopeError):
    """File is not in the expected on-disk format (bad magic, truncation, ragged rows)."""


class UnsupportedArray(ShiftscopeError):
    """Array exists but has an unsupported shape or dtype."""


class ParseError(ShiftscopeError):
    """A cell could not be parsed; carries row/column location."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class IoError(ShiftscopeError):
    """Underlying I/O failure while reading or writing."""


class SampleTooLarge(ShiftscopeError):
    """Requested sample size exceeds what the dataset can provide."""


class LabelsRequired(ShiftscopeError):
    """Operation needs class labels but the dataset has none."""


class InvalidSplit(ShiftscopeError):
    """Class split is overlapping or has an empty side."""


class DimError(ShiftscopeError):
    """Embedding dimensions of the two operands differ."""


class KTooLarge(ShiftscopeError):
    """Neighbor count k exceeds the number of available points."""


class IndexPairingError(ShiftscopeError):
    """Reference/evaluation sets are not index-paired (sizes differ)."""


class InsufficientSamples(ShiftscopeError):
    """Statistical routine called with too few values."""


class ConfigError(ShiftscopeError):
    """Configuration value violates its documented constraints."""


class InfiniteBarError(ShiftscopeError):
    """Persistence diagram still contains an infinite bar where finiteness is required."""
