import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavemu.arm import (
    HOME_POSITION,
    NED_TO_BASE,
    TrackingGains,
    conditioning,
    forward_kinematics,
    jacobian,
    joint_velocities,
    planar_arm,
    sawyer_like,
    track_trajectory,
)
from uavemu.errors import ParameterError, TrackingError
from uavemu.quadcopter import Trajectory
from uavemu.wind import DrydenParams, MeanWind, dryden_wind
from uavemu.quadcopter import QuadParams, simulate_hover

ARM = sawyer_like()
joints = st.lists(st.floats(-1.2, 1.2, allow_nan=False), min_size=7, max_size=7).map(np.array)


def line_trajectory(v_ned, duration=2.0, dt=0.1):
    t = np.arange(int(round(duration / dt)) + 1) * dt
    v = np.tile(v_ned, (len(t), 1))
    z = np.zeros((len(t), 3))
    return Trajectory(t, t[:, None] * v, z, v, z)


def test_home_pose():
    np.testing.assert_allclose(forward_kinematics(ARM, np.zeros(7)).position, HOME_POSITION, atol=1e-15)
    s_min, cond = conditioning(jacobian(ARM, np.zeros(7)))
    assert s_min > 0.2 and cond < 10


def test_wrist_roll_keeps_tool_point():
    q = np.zeros(7)
    for a in (-2.0, 0.5, 2.5):
        q[6] = a
        np.testing.assert_allclose(forward_kinematics(ARM, q).position, HOME_POSITION, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(joints, joints)
def test_jacobian_integrates_to_forward_kinematics(q0, q1):
    """FK(q1) - FK(q0) equals the line integral of J_v along the straight joint path."""
    s = np.linspace(0.0, 1.0, 201)
    dq = q1 - q0
    vel = np.array([jacobian(ARM, q0 + si * dq)[:3] @ dq for si in s])
    # composite Simpson
    w = np.ones_like(s)
    w[1:-1:2], w[2:-1:2] = 4, 2
    integral = (s[1] - s[0]) / 3 * (w @ vel)
    delta = forward_kinematics(ARM, q1).position - forward_kinematics(ARM, q0).position
    np.testing.assert_allclose(integral, delta, atol=1e-8)


def test_planar_arm_jacobian_rows():
    arm = planar_arm()
    J = jacobian(arm, np.linspace(-0.5, 0.5, 7))
    np.testing.assert_allclose(J[2], 0.0, atol=1e-15)
    np.testing.assert_allclose(J[3:5], 0.0, atol=1e-15)
    np.testing.assert_allclose(J[5], 1.0)


def test_home_jacobian_matches_hand_derivation_for_first_joint():
    # joint 1 rotates about base z through the origin: v = z x p
    J = jacobian(ARM, np.zeros(7))
    np.testing.assert_allclose(J[:3, 0], np.cross([0, 0, 1], HOME_POSITION), atol=1e-15)
    np.testing.assert_allclose(J[3:, 0], [0, 0, 1], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(joints, st.lists(st.floats(-1, 1, allow_nan=False), min_size=6, max_size=6).map(np.array))
def test_well_conditioned_solution_is_minimum_norm(q, V):
    J = jacobian(ARM, q)
    if conditioning(J)[0] < 0.05:
        return
    qd = joint_velocities(J, V)
    np.testing.assert_allclose(qd, np.linalg.pinv(J) @ V, atol=1e-10)
    np.testing.assert_allclose(J @ qd, V, atol=1e-10)


def test_damping_bounds_rates_at_singularity():
    J = np.diag([1.0, 1.0, 0.0])
    qd = joint_velocities(J, [0.0, 0.0, 1.0], damping=1e-3)
    assert np.all(np.isfinite(qd)) and np.linalg.norm(qd) < 1e3


def test_stationary_trajectory_does_not_drift():
    run = track_trajectory(ARM, line_trajectory([0.0, 0.0, 0.0], 3.0))
    assert np.max(run.tracking_error) < 1e-12
    assert np.max(run.speed) < 1e-12


def test_constant_speed_line():
    run = track_trajectory(ARM, line_trajectory([0.3, 0.0, 0.0], 1.0))
    steady = run.speed[(run.t > 0.3) & (run.t < 0.95)]
    assert np.all(np.abs(steady - 0.3) < 0.003)
    # north maps to base +x
    assert run.position[-1, 0] - run.position[0, 0] > 0.28


def test_speed_cap():
    run = track_trajectory(ARM, line_trajectory([0.8, 0.0, 0.0], 0.3))
    assert run.speed.max() <= ARM.speed_cap + 1e-12


def test_hover_replay_rms_error():
    w = dryden_wind(DrydenParams(), MeanWind(), 1500, seed=0)
    traj = simulate_hover(QuadParams(), w, (0, 0, 0), 14.0)
    run = track_trajectory(ARM, traj)
    assert np.sqrt(np.mean(run.tracking_error**2)) < 2e-3
    assert run.sigma_min.min() > 0.15


def test_proportional_loop_removes_integration_drift():
    traj = line_trajectory([0.0, 0.04, -0.02], 5.0)
    open_loop = track_trajectory(ARM, traj, TrackingGains(kp=0.0, kr=0.0), feedforward="derivative")
    closed = track_trajectory(ARM, traj, TrackingGains(), feedforward="derivative")
    assert open_loop.tracking_error[-1] > 10 * closed.tracking_error[-1]


def test_workspace_limit():
    with pytest.raises(TrackingError, match="workspace"):
        track_trajectory(ARM, line_trajectory([0.4, 0.0, 0.0], 1.0))


def test_joint_limit_checks():
    with pytest.raises(ParameterError):
        forward_kinematics(ARM, np.full(7, 3.5))
    with pytest.raises(ParameterError):
        forward_kinematics(ARM, np.zeros(6))
    with pytest.raises(ParameterError):
        track_trajectory(ARM, line_trajectory([0, 0, 0]), feedforward="spline")


def test_ned_to_base_is_proper_axis_flip():
    assert np.linalg.det(NED_TO_BASE) == 1.0
