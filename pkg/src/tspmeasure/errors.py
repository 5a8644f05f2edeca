"""Exception hierarchy.

Configuration problems derive from :class:`ConfigurationError`, problems with
the measured data from :class:`DataError`. The CLI maps the two families to
exit codes 2 and 3.
"""


class TspMeasureError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TspMeasureError, ValueError):
    """Invalid parameters or inconsistent inputs."""


class DataError(TspMeasureError):
    """The data cannot support the requested computation."""


class InsufficientDataError(DataError):
    pass


class AlignmentError(DataError):
    def __init__(self, message, confidence=None):
        super().__init__(message)
        self.confidence = confidence


class DegenerateInputError(DataError):
    pass


class DetectionError(DataError):
    pass


class RangeError(DataError):
    """Decay curve does not span the dynamic range needed for a fit."""

    def __init__(self, message, achieved_range_db):
        super().__init__(message)
        self.achieved_range_db = achieved_range_db


class IncompleteInputError(DataError):
    pass


class WavParseError(DataError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnsupportedFormatError(DataError):
    pass
