import numpy as np
import pytest

from uavemu.errors import GridError, ParameterError, SingularityError
from uavemu.quadcopter import (
    ControlInput,
    HoverController,
    QuadParams,
    QuadState,
    euler_rates,
    pid_hover,
    quad_derivatives,
    rk4_step,
    simulate_hover,
)
from uavemu.wind import DrydenParams, MeanWind, TurbulenceSeries, dryden_wind

P = QuadParams()
CALM = np.zeros(3)


def still_air(n, dt=0.01):
    z = np.zeros(n)
    return TurbulenceSeries(np.arange(n) * dt, z, z, z, np.zeros((n, 3)))


def test_hover_is_an_equilibrium():
    d = quad_derivatives(QuadState(), ControlInput(P.hover_thrust), CALM, P)
    np.testing.assert_array_equal(d, np.zeros(12))


def test_free_fall():
    x = QuadState()
    h = 1e-3
    for _ in range(1000):
        x = rk4_step(x, ControlInput(0.0), CALM, QuadParams(C_d=0.0), h)
    assert x.p_d == pytest.approx(0.5 * P.g, rel=1e-9)
    assert x.v_d == pytest.approx(P.g, rel=1e-9)


def test_drag_is_quadratic_and_componentwise():
    # at rest in a 2 m/s north wind the drag accelerates north by C v|v| / m
    d = quad_derivatives(QuadState(), ControlInput(P.hover_thrust), [2.0, 0.0, 0.0], P)
    assert d[3] == pytest.approx(0.1 * 4.0)
    d = quad_derivatives(QuadState(), ControlInput(P.hover_thrust), [-2.0, 1.0, 0.0], P)
    assert d[3:5] == pytest.approx([-0.4, 0.1])


def test_drag_shapes():
    assert QuadParams(C_d=[0.1, 0.2, 0.3]).C_d[1, 1] == 0.2
    assert QuadParams(C_d=0.3).C_d[2, 2] == 0.3
    with pytest.raises(ParameterError):
        QuadParams(C_d=-np.eye(3))


def test_gyroscopic_coupling():
    x = QuadState(omega_p=1.0, omega_q=0.0, omega_r=2.0)
    d = quad_derivatives(x, ControlInput(P.hover_thrust), CALM, P)
    # (J_z - J_x)/J_y * p * r = (0.02 - 0.01)/0.01 * 2
    assert d[10] == pytest.approx(2.0)


def test_rk4_is_fourth_order():
    """Halving the step cuts the global error by about 16."""
    x0 = QuadState(v_n=1.0, phi=0.2, theta=-0.1, omega_p=0.5, omega_q=-0.3, omega_r=0.2)
    u = ControlInput(P.hover_thrust * 1.1, 0.01, -0.02, 0.005)
    wind = [1.0, -0.5, 0.2]

    def run(h):
        x = x0.as_array()
        for _ in range(int(round(1.0 / h))):
            x = rk4_step(x, u, wind, P, h)
        return x

    ref = run(1e-4)
    e1 = np.linalg.norm(run(0.02) - ref)
    e2 = np.linalg.norm(run(0.01) - ref)
    assert 12 < e1 / e2 < 20


def test_torque_free_rotation_conserves_energy():
    x = QuadState(omega_p=0.7, omega_q=-0.4, omega_r=1.1).as_array()
    J = np.array([P.J_x, P.J_y, P.J_z])
    e0 = 0.5 * np.sum(J * x[9:] ** 2)
    for _ in range(2000):
        x = rk4_step(x, ControlInput(0.0), CALM, P, 1e-3)
    assert 0.5 * np.sum(J * x[9:] ** 2) == pytest.approx(e0, rel=1e-9)


def test_euler_singularity_is_reported():
    with pytest.raises(SingularityError):
        quad_derivatives(QuadState(theta=np.pi / 2), ControlInput(P.hover_thrust), CALM, P)


def test_controller_hover_command():
    u = pid_hover(QuadState(), (0, 0, 0, 0))
    assert u.F == pytest.approx(P.hover_thrust)
    assert (u.tau_phi, u.tau_theta, u.tau_psi) == (0.0, 0.0, 0.0)


def test_controller_pushes_toward_waypoint():
    # waypoint to the north: pitch nose down (negative theta command -> negative torque)
    u = pid_hover(QuadState(), (1.0, 0.0, 0.0))
    assert u.tau_theta < 0
    with pytest.raises(ParameterError):
        ControlInput(-1.0)


def test_closed_loop_converges_from_offset():
    start = QuadState(p_n=0.5, p_e=-0.3, p_d=0.2)
    traj = simulate_hover(P, still_air(1100), (0, 0, 0), 10.0, initial_state=start)
    assert np.linalg.norm(traj.position[-1]) < 0.02
    assert np.linalg.norm(traj.velocity[-1]) < 0.02


def test_hover_in_calm_air_stays_put():
    traj = simulate_hover(P, still_air(200), (0, 0, 0), 1.0)
    assert np.max(np.abs(traj.position)) == 0.0
    assert len(traj) == 11 and traj.dt == pytest.approx(0.1)


def test_wind_response_stays_bounded():
    peaks = []
    for seed in range(10):
        w = dryden_wind(DrydenParams(), MeanWind(), 1600, seed=seed)
        traj = simulate_hover(P, w, (0, 0, 0), 15.0)
        peaks.append(np.linalg.norm(traj.velocity, axis=1).max())
    assert max(peaks) < 0.7
    assert min(peaks) > 0.01


def test_simulation_is_deterministic():
    w = dryden_wind(DrydenParams(), MeanWind(), 600, seed=5)
    a = simulate_hover(P, w, (0, 0, 0), 5.0)
    b = simulate_hover(P, w, (0, 0, 0), 5.0)
    np.testing.assert_array_equal(a.position, b.position)


def test_exported_rates_match_finite_differences():
    w = dryden_wind(DrydenParams(), MeanWind(), 600, seed=2)
    fine = simulate_hover(P, w, (0, 0, 0), 5.0, export_dt=0.001)
    dpos = np.gradient(fine.position, fine.t, axis=0)
    deul = np.gradient(fine.euler, fine.t, axis=0)
    assert np.max(np.abs(dpos[1:-1] - fine.velocity[1:-1])) < 1e-4
    assert np.max(np.abs(deul[1:-1] - fine.euler_rate[1:-1])) < 5e-3


def test_settle_time_restarts_the_clock():
    w = dryden_wind(DrydenParams(), MeanWind(), 700, seed=1)
    full = simulate_hover(P, w, (0, 0, 0), 6.0)
    late = simulate_hover(P, w, (0, 0, 0), 4.0, settle_time=2.0)
    assert late.t[0] == 0.0
    np.testing.assert_array_equal(late.position, full.position[20:])


def test_wind_too_short():
    with pytest.raises(GridError):
        simulate_hover(P, still_air(50), (0, 0, 0), 1.0)


def test_export_must_divide_step():
    with pytest.raises(ParameterError):
        simulate_hover(P, still_air(200), (0, 0, 0), 1.0, export_dt=0.0015)


def test_integrator_windup_is_clipped():
    c = HoverController()
    for _ in range(10000):
        c(QuadState(), (100.0, 0.0, 0.0), dt=0.01)
    assert c.integral[0] == c.gains.max_integral


def test_euler_rates_identity_at_level():
    np.testing.assert_allclose(euler_rates(np.zeros(3), [0.1, 0.2, 0.3]), [[0.1, 0.2, 0.3]])
