import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavemu import errors
from uavemu.units import FT, INCH, db_to_amplitude, parse_quantity, power_db, wavelength


@pytest.mark.parametrize(
    "text, expected",
    [
        ("200 ft", 200 * FT),
        ("2 in", 2 * INCH),
        ("4.4 ms", 4.4e-3),
        ("28 GHz", 28e9),
        ("300 Hz", 300.0),
        ("-31.39", -31.39),
        ("1e-3", 1e-3),
        ("180 deg", math.pi),
        (".5 m/s", 0.5),
        ("  7  ", 7.0),
    ],
)
def test_parse_quantity(text, expected):
    assert parse_quantity(text) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("text", ["", "ft", "1.2.3 m", "3 parsecs", "nan"])
def test_parse_quantity_rejects(text):
    with pytest.raises(errors.ParseError):
        parse_quantity(text)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_parse_quantity_roundtrips_repr(x):
    assert parse_quantity(repr(x)) == x


def test_db_helpers():
    assert db_to_amplitude(20.0) == pytest.approx(10.0)
    assert power_db(100.0) == pytest.approx(20.0)
    # the floor keeps log10 finite
    assert np.isfinite(power_db(0.0))
    assert wavelength(28e9) == pytest.approx(0.0107068735)


def test_error_hierarchy():
    # every library error is an EmulationError, and the value-like ones are ValueErrors too
    for cls in (
        errors.ParameterError,
        errors.SingularityError,
        errors.TrackingError,
        errors.GridError,
        errors.GeometryError,
        errors.CalibrationError,
        errors.DetectionError,
        errors.ParseError,
    ):
        assert issubclass(cls, errors.EmulationError)
    assert issubclass(errors.ParseError, ValueError)
    assert issubclass(errors.SingularityError, ArithmeticError)
