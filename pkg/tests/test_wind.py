import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavemu.errors import ParameterError
from uavemu.units import FT
from uavemu.wind import (
    DigitalFilter,
    DrydenParams,
    MeanWind,
    TurbulenceSeries,
    compose_wind,
    discretize_dryden,
    dryden_continuous,
    dryden_response,
    dryden_wind,
    generate_turbulence,
    wind_frame,
)


def test_from_feet():
    p = DrydenParams.from_feet(200, 200, 50)
    assert p.L_u == pytest.approx(60.96)
    assert p.L_w == pytest.approx(50 * FT)


@pytest.mark.parametrize("kw", [{"sigma_u2": -1.0}, {"L_v": 0.0}, {"dt": -0.01}, {"V_a0": 0.0}])
def test_params_validation(kw):
    with pytest.raises(ParameterError):
        DrydenParams(**kw)


def test_dc_gain_matches_continuous():
    # sigma^2 = 2, L = 100 m, V = 5 m/s; u filter DC gain is sigma*sqrt(2L/V)
    p = DrydenParams(sigma_u2=2.0, sigma_v2=2.0, L_u=100.0, L_v=100.0, V_a0=5.0, dt=0.01)
    for axis in ("u", "v"):
        num, den = dryden_continuous(p, axis)
        f = discretize_dryden(p, axis)
        assert np.sum(f.numerator) / np.sum(f.denominator) == pytest.approx(num[-1] / den[-1], rel=1e-12)
    assert dryden_response(p, "u", 0.0) == pytest.approx(np.sqrt(2.0) * np.sqrt(2 * 100 / 5))


def test_zero_variance_gives_zero_filter():
    f = discretize_dryden(DrydenParams(), "w")
    assert f.is_zero
    assert np.all(f(np.random.default_rng(0).standard_normal(100)) == 0)


@pytest.mark.parametrize("axis", ["u", "v"])
def test_matched_response_tracks_continuous(axis):
    p = DrydenParams(dt=0.01)
    f = np.linspace(0.001, 0.1 / p.dt, 200)
    hd = discretize_dryden(p, axis).frequency_response(f)
    hc = dryden_response(p, axis, f)
    assert np.max(np.abs(np.abs(hd) / np.abs(hc) - 1)) < 0.02


@pytest.mark.parametrize("axis", ["u", "v"])
def test_tustin_is_also_stable(axis):
    f = discretize_dryden(DrydenParams(), axis, method="tustin")
    assert f.is_stable()


def test_unknown_method():
    with pytest.raises(ParameterError):
        discretize_dryden(DrydenParams(), "u", method="zoh")


def test_filter_state_carries_across_calls():
    p = DrydenParams()
    x = np.random.default_rng(1).standard_normal(1000)
    f1 = discretize_dryden(p, "v")
    whole = f1(x)
    f2 = discretize_dryden(p, "v")
    parts = np.concatenate([f2(x[:300]), f2(x[300:])])
    np.testing.assert_allclose(parts, whole, rtol=0, atol=1e-14)


def test_filter_normalizes_leading_coefficient():
    f = DigitalFilter(np.array([2.0]), np.array([2.0, -1.0]), 0.1)
    assert f.denominator[0] == 1.0 and f.numerator[0] == 1.0
    with pytest.raises(ParameterError):
        DigitalFilter(np.array([1.0]), np.array([0.0, 1.0]), 0.1)


def test_generate_is_deterministic_per_seed():
    p = DrydenParams()
    filters = [discretize_dryden(p, a) for a in "uvw"]
    a = generate_turbulence(filters, 500, seed=3)
    b = generate_turbulence(filters, 500, seed=3)
    c = generate_turbulence(filters, 500, seed=4)
    np.testing.assert_array_equal(a.uvw, b.uvw)
    assert not np.array_equal(a.u, c.u)


def test_generate_validation():
    p = DrydenParams()
    filters = [discretize_dryden(p, a) for a in "uvw"]
    with pytest.raises(ParameterError):
        generate_turbulence(filters[:2], 10)
    with pytest.raises(ParameterError):
        generate_turbulence(filters, 0)


def test_wind_frame_follows_mean_heading():
    R = wind_frame(MeanWind(2.0, -1.0, 0.0))
    np.testing.assert_allclose(R[:, 0], np.array([2.0, -1.0, 0.0]) / np.sqrt(5))
    np.testing.assert_allclose(R[:, 2], [0, 0, 1])
    assert np.linalg.det(R) == pytest.approx(1.0)
    # calm air falls back to north
    np.testing.assert_allclose(wind_frame(MeanWind(0, 0, 0)), np.eye(3))


@settings(max_examples=30, deadline=None)
@given(
    st.floats(-5, 5, allow_nan=False),
    st.floats(-5, 5, allow_nan=False),
    st.integers(0, 2**32 - 1),
)
def test_composed_wind_invariants(ub, vb, seed):
    """Rotation preserves turbulence energy sample by sample and adds the mean exactly."""
    mean = MeanWind(ub, vb, 0.0)
    p = DrydenParams(dt=0.1)
    w = dryden_wind(p, mean, 64, seed=seed)
    dev = w.V_w - mean.vector
    np.testing.assert_allclose(np.linalg.norm(dev, axis=1), np.linalg.norm(w.uvw, axis=1), atol=1e-12)
    # w is off by default, so the vertical wind is exactly the mean
    np.testing.assert_array_equal(w.V_w[:, 2], np.zeros(64))


def test_compose_rejects_bad_rotation():
    turb = TurbulenceSeries(np.arange(3) * 0.1, np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(ParameterError):
        compose_wind(MeanWind(), turb, np.diag([1.0, 1.0, -1.0]))


def test_series_grid_checks_and_lookup():
    with pytest.raises(ParameterError):
        TurbulenceSeries(np.array([0.0, 0.1, 0.3]), np.zeros(3), np.zeros(3), np.zeros(3))
    w = dryden_wind(DrydenParams(dt=0.1), MeanWind(), 10, seed=0)
    np.testing.assert_array_equal(w.wind_at(0.25), w.V_w[2])
    np.testing.assert_array_equal(w.wind_at(99.0), w.V_w[-1])
