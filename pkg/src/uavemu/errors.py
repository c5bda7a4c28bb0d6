"""Exception types shared across the package."""


class EmulationError(Exception):
    """Base class for all package errors."""


class ParameterError(EmulationError, ValueError):
    """An argument violates its documented invariants."""


class SingularityError(EmulationError, ArithmeticError):
    """Euler-angle kinematics hit the pitch = +/-90 deg singularity."""


class TrackingError(EmulationError):
    """The arm could not follow the requested trajectory."""


class GridError(EmulationError, ValueError):
    """Samples are not on the expected time grid or do not cover it."""


class GeometryError(EmulationError, ValueError):
    """Degenerate transmitter/receiver geometry."""


class CalibrationError(EmulationError, ArithmeticError):
    """Calibration standards produced a degenerate system."""


class DetectionError(EmulationError):
    """No idle segment was found in a capture."""


class ParseError(EmulationError, ValueError):
    """A CSV or config file does not match its schema."""
