"""Exception hierarchy; each class maps to a distinct CLI exit code."""


class GrngError(Exception):
    exit_code = 1


class ConfigurationError(GrngError, ValueError):
    """A parameter is outside its allowed range."""

    exit_code = 2


class FormatError(GrngError):
    """A sample file is malformed. ``offset`` is the byte where decoding failed."""

    exit_code = 3

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class CapacityError(GrngError):
    """Exact enumeration requested beyond the supported size."""

    exit_code = 4


class ToleranceError(GrngError):
    exit_code = 5


class DegenerateDataError(GrngError, ValueError):
    """Input has zero variance or too few points for the statistic."""

    exit_code = 6


class ShapeError(GrngError, ValueError):
    exit_code = 7
