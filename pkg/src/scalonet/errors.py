"""Exception types shared across the package.

Every recoverable failure mode raises one of these so callers (and the CLI
exit-code mapping) can tell input problems apart from numerical ones.
"""


class ScalonetError(Exception):
    """Base class for all package errors."""


class DatasetFormatError(ScalonetError):
    """A signals file violates the CSV window format."""


class MalformedRowError(DatasetFormatError):
    pass


class InconsistentLengthError(DatasetFormatError):
    pass


class UnknownAxisError(DatasetFormatError):
    pass


class LabelRangeError(DatasetFormatError):
    pass


class EmptyDatasetError(DatasetFormatError):
    pass


class MissingAxisError(ScalonetError):
    pass


class InvalidFractionError(ScalonetError):
    pass


class ZeroEnergyError(ScalonetError):
    pass


class InvalidFramingError(ScalonetError):
    pass


class InvalidWaveletError(ScalonetError):
    pass


class GridTooNarrowError(ScalonetError):
    pass


class InvalidScaleError(ScalonetError):
    pass


class ScaleTooLargeError(ScalonetError):
    pass


class InvalidWindowError(ScalonetError):
    pass


class BasisNotOrthogonalError(ScalonetError):
    pass


class DimensionMismatchError(ScalonetError):
    pass


class CropTooWideError(ScalonetError):
    pass


class NotDivisibleError(ScalonetError):
    pass


class RawFormatError(ScalonetError):
    """A CWTS or SHNN binary file is corrupt or has the wrong magic."""


class ShapeMismatchError(ScalonetError):
    pass


class DivergedError(ScalonetError):
    """Training loss became NaN or infinite."""


class EmptySweepError(ScalonetError):
    pass


class SweepPointError(ScalonetError):
    """A sweep point failed; the message carries the sweep value."""


class ConfigError(ScalonetError):
    """Bad run-config file, unknown key, or unparsable flag value."""
