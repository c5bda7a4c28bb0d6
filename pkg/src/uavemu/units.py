"""Unit constants and the unit-suffixed value parser used by config files."""

from __future__ import annotations

import re

import numpy as np

from .errors import ParseError

C0 = 299_792_458.0
FT = 0.3048
INCH = 0.0254

_SCALE = {
    "": 1.0,
    "m": 1.0,
    "cm": 0.01,
    "mm": 1e-3,
    "ft": FT,
    "in": INCH,
    "s": 1.0,
    "ms": 1e-3,
    "us": 1e-6,
    "hz": 1.0,
    "khz": 1e3,
    "mhz": 1e6,
    "ghz": 1e9,
    "m/s": 1.0,
    "ft/s": FT,
    "m^2/s^2": 1.0,
    "m2/s2": 1.0,
    "kg": 1.0,
    "kg*m^2": 1.0,
    "kg/m": 1.0,
    "n": 1.0,
    "m/s^2": 1.0,
    "rad": 1.0,
    "deg": np.pi / 180.0,
    "rad/s": 1.0,
    "db": 1.0,
    "1/s": 1.0,
}

_VALUE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


def parse_quantity(text: str) -> float:
    """Parse ``"200 ft"`` into SI (60.96). A bare number is taken as SI."""
    m = _VALUE.match(text)
    if not m:
        raise ParseError(f"cannot parse quantity {text!r}")
    unit = m.group(2).lower()
    if unit not in _SCALE:
        raise ParseError(f"unknown unit {m.group(2)!r} in {text!r}")
    return float(m.group(1)) * _SCALE[unit]


def db_to_amplitude(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 20.0)


def power_db(x, floor: float = 1e-30):
    return 10.0 * np.log10(np.maximum(np.asarray(x, dtype=float), floor))


def wavelength(f_c: float) -> float:
    return C0 / f_c
