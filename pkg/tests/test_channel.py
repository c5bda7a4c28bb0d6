import numpy as np
import pytest

from uavemu.channel import (
    ChannelParams,
    S21Series,
    SounderConfig,
    cw_response,
    doppler_capture_range,
    friis_gain_db,
    resample_path,
    synthesize_s21,
)
from uavemu.errors import GeometryError, GridError, ParameterError

CFG = SounderConfig()
TX = np.array([3.0, 0.0, 0.0])


def static_path(cfg=CFG, at=(0.0, 0.0, 0.0)):
    return np.tile(at, (cfg.n_points, 1)).astype(float)


def receding(v, cfg=CFG):
    return np.column_stack([-v * cfg.time_grid(), np.zeros(cfg.n_points), np.zeros(cfg.n_points)])


def test_friis_intercept():
    assert friis_gain_db(28e9) == pytest.approx(-31.39, abs=0.005)
    assert ChannelParams().pg_d0_dB == -31.39


def test_stationary_magnitude_follows_path_gain():
    ch = ChannelParams(n_exp=2.0)
    s = synthesize_s21(static_path(), TX, CFG, ch, noise=False)
    expected = 10 ** (ch.path_gain_db(3.0) / 20)
    np.testing.assert_allclose(np.abs(s.samples), expected, rtol=1e-12)
    assert np.ptp(np.angle(s.samples)) < 1e-12


@pytest.mark.parametrize("v", [0.1, 0.3, -0.15])
def test_phase_slope_is_doppler(v):
    s = synthesize_s21(receding(v), TX, CFG, ChannelParams(), noise=False)
    phase = np.unwrap(np.angle(s.samples))
    slope = np.polyfit(CFG.time_grid(), phase, 1)[0]
    assert slope / (2 * np.pi) == pytest.approx(-v / CFG.wavelength, rel=1e-6)


def test_instantaneous_frequency_tracks_velocity():
    t = CFG.time_grid()
    v = 0.4 * np.sin(2 * np.pi * 0.1 * t)
    x = -np.cumsum(v) * CFG.Ts
    path = np.column_stack([x, np.zeros_like(x), np.zeros_like(x)])
    s = synthesize_s21(path, TX, CFG, ChannelParams(), noise=False)
    f_inst = np.diff(np.unwrap(np.angle(s.samples))) / (2 * np.pi * CFG.Ts)
    np.testing.assert_allclose(f_inst, -v[1:] / CFG.wavelength, atol=1e-6)


@pytest.mark.parametrize("Ts, half", [(4.4e-3, 113.636), (5e-3, 100.0), (1e-3, 500.0)])
def test_capture_range(Ts, half):
    lo, hi = doppler_capture_range(SounderConfig(Ts=Ts))
    assert hi == pytest.approx(half, abs=1e-3)
    assert lo == -hi


def test_noise_only_floor():
    ch = ChannelParams(pg_d0_dB=-400.0)
    s = synthesize_s21(static_path(), TX, CFG, ch, seed=1)
    assert np.mean(np.abs(s.samples) ** 2) == pytest.approx(1e-6, rel=0.06)
    wide = SounderConfig(if_bandwidth=3000.0)
    assert wide.noise_power == pytest.approx(1e-5)
    assert SounderConfig(noise_floor_dB=-np.inf).noise_power == 0.0


def test_shadowing_draw_and_override():
    ch = ChannelParams(shadow_sigma_dB=2.0)
    a = synthesize_s21(static_path(), TX, CFG, ch, seed=4, noise=False)
    b = synthesize_s21(static_path(), TX, CFG, ch, seed=4, noise=False)
    assert a.meta["shadow_db"] == b.meta["shadow_db"] != 0.0
    c = synthesize_s21(static_path(), TX, CFG, ch, shadow_db=3.0, noise=False)
    d = synthesize_s21(static_path(), TX, CFG, ch, shadow_db=0.0, noise=False)
    assert 20 * np.log10(abs(c.samples[0]) / abs(d.samples[0])) == pytest.approx(3.0)


def test_image_path_adds_interference():
    s = synthesize_s21(static_path(), TX, CFG, ChannelParams(), noise=False, images=[((3.0, 0.0, 2.0), 6.0)])
    direct = synthesize_s21(static_path(), TX, CFG, ChannelParams(), noise=False)
    assert not np.allclose(s.samples, direct.samples)


def test_cw_response_sum():
    lam = 0.01
    out = cw_response(np.array([[1.0], [1.005]]), np.array([[0.0], [0.0]]), lam)
    assert abs(out[0]) == pytest.approx(0.0, abs=1e-12)


def test_grid_and_geometry_errors():
    with pytest.raises(GridError):
        synthesize_s21(np.zeros((10, 3)), TX, CFG, ChannelParams())
    with pytest.raises(GeometryError):
        synthesize_s21(static_path(at=TX), TX, CFG, ChannelParams())
    with pytest.raises(ParameterError):
        SounderConfig(n_points=1000)
    with pytest.raises(GridError):
        S21Series(CFG, np.zeros(10))


def test_resample_linear_motion_is_exact():
    t_log = np.arange(0, 20.0, 0.01)
    p = np.column_stack([0.1 * t_log, -0.2 * t_log, np.zeros_like(t_log)])
    grid = CFG.time_grid()
    out = resample_path(t_log, p, grid)
    np.testing.assert_allclose(out[:, 0], 0.1 * grid, atol=1e-12)
    np.testing.assert_allclose(out[:, 1], -0.2 * grid, atol=1e-12)


def test_resample_smooth_motion():
    t_log = np.arange(0, 20.0, 0.01)
    p = np.column_stack([np.sin(t_log), np.cos(t_log), t_log**2])
    grid = CFG.time_grid()
    out = resample_path(t_log, p, grid)
    np.testing.assert_allclose(out, np.column_stack([np.sin(grid), np.cos(grid), grid**2]), atol=1e-8)


@pytest.mark.parametrize(
    "t_log",
    [np.array([0.0]), np.arange(0, 10.0, 0.01), np.arange(1.0, 20.0, 0.01)],
    ids=["single", "short", "late-start"],
)
def test_resample_rejects_short_logs(t_log):
    with pytest.raises(GridError):
        resample_path(t_log, np.zeros((len(t_log), 3)), CFG.time_grid())
