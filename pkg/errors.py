"""
Tactile Toolkit - Error types
Every error carries the exit code the CLI reports for it
"""

from typing import Optional


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class TactileError(Exception):
    """Base class for all toolkit errors"""

    exit_code = EXIT_DATA

    def to_record(self) -> dict:
        """Machine-readable error record for the CLI"""
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class LineError(TactileError):
    """An error tied to a line (and optionally a field) of an input file"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)

    def to_record(self) -> dict:
        record = super().to_record()
        if self.line is not None:
            record["line"] = self.line
        if self.field:
            record["field"] = self.field
        return record


# Data / format errors (exit 2)

class SaturationError(TactileError):
    """ADC count of 0: sensor resistance too high to measure"""


class InvalidBaseline(TactileError):
    """Baseline resistance not strictly positive"""


class ShapeError(TactileError):
    """Pixel grid does not match"""


class EmptyCapture(TactileError):
    """No frames to work with"""


class RebaselineError(TactileError):
    """Some pixels could not be rebaselined; the previous baseline is kept for them"""

    def __init__(self, message: str, pixels=(), baseline=None):
        self.pixels = tuple(pixels)
        self.baseline = baseline
        super().__init__(message)


class NoValidPixel(TactileError):
    """Every pixel is missing at the requested sample"""


class TraceRangeError(TactileError):
    """Requested time lies outside the trace"""


class UnitMismatch(TactileError):
    """Model output unit does not match the requested estimate"""


class IncomparableSessions(TactileError):
    """Sessions cannot be compared (width mismatch or too few sessions/trials)"""


class EmptySchedule(TactileError):
    """Simulator width schedule is empty"""


class FormatError(LineError):
    """Malformed file content"""


class OrderError(LineError):
    """Timestamps or marks out of order"""


class RangeError(LineError):
    """ADC count outside [0, 1023]"""


class ProfileParseError(LineError):
    """Malformed calibration profile or scenario file"""


# Numerical / control failures (exit 3)

class NumericalError(TactileError):
    exit_code = EXIT_NUMERICAL


class EmptyWindow(NumericalError):
    """No samples inside the peak-search window"""


class InsufficientData(NumericalError):
    """Too few usable samples for a fit"""


class DegenerateAbscissa(NumericalError):
    """All x values equal in a linear fit"""


class NoDecision(NumericalError):
    """A settled estimate could not be produced for a contact decision"""


class NoObjectError(NumericalError):
    """Gripper reached its minimum width without detecting contact"""


class ForceUnreachable(NumericalError):
    """Width limit reached before the target force"""

    def __init__(self, message: str, width: Optional[float] = None, force: Optional[float] = None):
        self.width = width
        self.force = force
        super().__init__(message)


class OvershootError(NumericalError):
    """Force estimate above target + band (or the next step is projected to be)"""

    def __init__(self, message: str, width: Optional[float] = None, force: Optional[float] = None,
                 projected: bool = False):
        self.width = width
        self.force = force
        self.projected = projected
        super().__init__(message)
