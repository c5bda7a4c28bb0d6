"""Emulation of a robotic-arm UAV channel-sounding experiment at 28 GHz.

Stages, in pipeline order: :mod:`~uavemu.wind` (Dryden turbulence),
:mod:`~uavemu.quadcopter` (closed-loop hover), :mod:`~uavemu.arm` (7-DOF
retargeting), :mod:`~uavemu.channel` (CW S21 synthesis),
:mod:`~uavemu.calibration` (moving-cable de-embedding) and
:mod:`~uavemu.analysis` (Doppler spread and path-loss fit).
:mod:`~uavemu.pipeline` ties them together.
"""

from .errors import (
    CalibrationError,
    DetectionError,
    EmulationError,
    GeometryError,
    GridError,
    ParameterError,
    ParseError,
    SingularityError,
    TrackingError,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "DetectionError",
    "EmulationError",
    "GeometryError",
    "GridError",
    "ParameterError",
    "ParseError",
    "SingularityError",
    "TrackingError",
    "__version__",
]
