"""Kinematic emulation of a 7-DOF serial arm carrying the receiver.

The arm is modelled with standard Denavit-Hartenberg parameters. Joint
rates come from a damped pseudo-inverse of the geometric Jacobian, and a
proportional pose loop removes integration drift while replaying a
quadcopter trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ParameterError, TrackingError
from .quadcopter import Trajectory

# NED displacement -> arm base frame (x forward, y left, z up)
NED_TO_BASE = np.diag([1.0, -1.0, -1.0])


@dataclass(frozen=True)
class ArmModel:
    """DH table rows are (a, alpha, d, theta_offset); joint angle i adds to theta_offset."""

    dh: np.ndarray
    q_min: np.ndarray
    q_max: np.ndarray
    qdot_max: np.ndarray
    speed_cap: float = 0.5

    def __post_init__(self):
        dh = np.asarray(self.dh, dtype=float)
        n = dh.shape[0]
        if dh.shape != (n, 4):
            raise ParameterError("DH table must have four columns")
        q_min = np.broadcast_to(np.asarray(self.q_min, dtype=float), (n,)).copy()
        q_max = np.broadcast_to(np.asarray(self.q_max, dtype=float), (n,)).copy()
        qdot_max = np.broadcast_to(np.asarray(self.qdot_max, dtype=float), (n,)).copy()
        if np.any(q_min >= q_max):
            raise ParameterError("joint limits must satisfy min < max")
        if np.any(qdot_max <= 0) or self.speed_cap <= 0:
            raise ParameterError("velocity limits must be positive")
        for name, val in (("dh", dh), ("q_min", q_min), ("q_max", q_max), ("qdot_max", qdot_max)):
            object.__setattr__(self, name, val)

    @property
    def n_joints(self) -> int:
        return self.dh.shape[0]

    def check_limits(self, q: np.ndarray) -> None:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n_joints,):
            raise ParameterError(f"expected {self.n_joints} joint angles, got shape {q.shape}")
        bad = np.flatnonzero((q < self.q_min) | (q > self.q_max))
        if bad.size:
            raise ParameterError(f"joints {(bad + 1).tolist()} outside limits")


def sawyer_like() -> ArmModel:
    """Seven revolute joints with Sawyer-class link dimensions.

    The joint offsets bend shoulder, elbow and wrist so that q = 0 is a
    well-conditioned pose reaching along +x, retracted enough that a 0.3 m
    excursion in any direction stays clear of the stretched-out singularity. At q = 0 the tool point sits at
    HOME_POSITION (metres, base frame). The tool point lies on the last
    joint axis.
    """
    dh = np.array(
        [
            [0.081, -np.pi / 2, 0.317, np.pi],
            [0.0, np.pi / 2, 0.1925, -np.pi / 2 + 0.4],
            [0.0, -np.pi / 2, 0.4, 0.0],
            [0.0, np.pi / 2, -0.1685, -2.0],
            [0.0, -np.pi / 2, 0.4, 0.0],
            [0.0, np.pi / 2, 0.1363, 1.5],
            [0.0, 0.0, 0.1335, 0.0],
        ]
    )
    return ArmModel(
        dh=dh,
        q_min=[-3.0, -3.0, -3.0, -2.9, -3.0, -2.9, -3.0],
        q_max=[3.0, 3.0, 3.0, 2.9, 3.0, 2.9, 3.0],
        qdot_max=[1.74, 1.33, 1.95, 1.95, 3.48, 3.48, 4.63],
    )


HOME_POSITION = np.array([0.40857764474525504, -0.16030000000000014, 0.05961013458450655])


def planar_arm(n: int = 7, link: float = 0.15) -> ArmModel:
    """All joint axes parallel to base z; used to sanity-check the Jacobian."""
    dh = np.zeros((n, 4))
    dh[:, 0] = link
    dh[:, 3] = 0.2
    return ArmModel(dh=dh, q_min=-np.pi, q_max=np.pi, qdot_max=2.0)


def _dh_transform(a, alpha, d, theta):
    ca, sa = np.cos(alpha), np.sin(alpha)
    ct, st = np.cos(theta), np.sin(theta)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def link_frames(model: ArmModel, q) -> list[np.ndarray]:
    """Homogeneous transforms of frames 0..n expressed in the base frame."""
    q = np.asarray(q, dtype=float)
    T = np.eye(4)
    frames = [T]
    for (a, alpha, d, off), qi in zip(model.dh, q):
        T = T @ _dh_transform(a, alpha, d, off + qi)
        frames.append(T)
    return frames


@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    rotation: np.ndarray

    @property
    def ypr(self) -> np.ndarray:
        """Intrinsic z-y-x Euler angles (yaw, pitch, roll)."""
        return Rotation.from_matrix(self.rotation).as_euler("ZYX")


def forward_kinematics(model: ArmModel, q) -> Pose:
    model.check_limits(np.asarray(q, dtype=float))
    T = link_frames(model, q)[-1]
    return Pose(T[:3, 3].copy(), T[:3, :3].copy())


def _jacobian_from_frames(frames: list[np.ndarray]) -> np.ndarray:
    F = np.asarray(frames[:-1])
    z = F[:, :3, 2]
    r = frames[-1][:3, 3] - F[:, :3, 3]
    return np.vstack([np.cross(z, r).T, z.T])


def jacobian(model: ArmModel, q) -> np.ndarray:
    """Geometric Jacobian: rows are tool linear velocity then angular velocity (base frame)."""
    model.check_limits(np.asarray(q, dtype=float))
    return _jacobian_from_frames(link_frames(model, q))


def conditioning(J: np.ndarray) -> tuple[float, float]:
    """(smallest singular value, condition number) of ``J``."""
    s = np.linalg.svd(J, compute_uv=False)
    return float(s[-1]), float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def joint_velocities(J: np.ndarray, V, damping: float = 1e-3) -> np.ndarray:
    """Joint rates for a tool twist via a damped pseudo-inverse.

    Damping is switched on only near singularities: it is zero while the
    smallest singular value exceeds ten times ``damping`` and grows to
    ``damping`` as that singular value approaches zero. Away from
    singularities this is the exact minimum-norm solution.
    """
    return _dls(np.linalg.svd(J, full_matrices=False), V, damping)


def _dls(svd, V, damping):
    U, s, Vt = svd
    V = np.asarray(V, dtype=float)
    band = 10.0 * damping
    lam2 = 0.0 if s[-1] >= band else damping**2 * (1.0 - (s[-1] / band) ** 2)
    gains = s / (s * s + lam2)
    return Vt.T @ (gains * (U.T @ V))


def _rotvec(R: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix (angles well below pi)."""
    c = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    axis = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    angle = np.arccos(c)
    if angle < 1e-8:
        return 0.5 * axis
    return angle / (2.0 * np.sin(angle)) * axis


def _rotation_error(R_des: np.ndarray, R: np.ndarray) -> np.ndarray:
    return _rotvec(R_des @ R.T)


def _ned_rotation(euler: np.ndarray) -> np.ndarray:
    """Body-to-NED rotation for (phi, theta, psi)."""
    phi, theta, psi = euler
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    return np.array(
        [
            [ct * cp, sf * st * cp - cf * sp, cf * st * cp + sf * sp],
            [ct * sp, sf * st * sp + cf * cp, cf * st * sp - sf * cp],
            [-st, sf * ct, cf * ct],
        ]
    )


def _ned_angular_velocity(euler: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Inertial-frame angular velocity from z-y-x Euler rates."""
    _, theta, psi = euler
    dphi, dtheta, dpsi = rates
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    return np.array(
        [
            -dtheta * sp + dphi * ct * cp,
            dtheta * cp + dphi * ct * sp,
            dpsi - dphi * st,
        ]
    )


@dataclass(frozen=True)
class TrackingGains:
    kp: float = 5.0
    kr: float = 5.0
    damping: float = 1e-3


@dataclass
class ArmRun:
    """Time series from one tracking run at the control tick."""

    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    desired: np.ndarray
    sigma_min: np.ndarray
    rotation: np.ndarray = field(repr=False, default=None)

    @property
    def tracking_error(self) -> np.ndarray:
        return np.linalg.norm(self.desired - self.position, axis=1)

    @property
    def speed(self) -> np.ndarray:
        return np.linalg.norm(self.velocity, axis=1)


def _interp_rows(t_src, rows, t):
    return np.column_stack([np.interp(t, t_src, rows[:, j]) for j in range(rows.shape[1])])


def track_trajectory(
    model: ArmModel,
    traj: Trajectory,
    gains: TrackingGains | None = None,
    *,
    tick: float = 0.01,
    scale: float = 1.0,
    q0=None,
    feedforward: str = "segment",
    track_orientation: bool = True,
    workspace_radius: float = 0.3,
) -> ArmRun:
    """Replay ``traj`` (relative to its first sample) around the arm's start pose.

    ``feedforward="segment"`` uses the slope of the linearly interpolated
    waypoints; ``"derivative"`` replays the exported velocities directly.
    Commanded linear speed is capped at ``model.speed_cap``.
    """
    gains = gains or TrackingGains()
    if feedforward not in ("segment", "derivative"):
        raise ParameterError(f"unknown feedforward mode {feedforward!r}")
    q = np.zeros(model.n_joints) if q0 is None else np.array(q0, dtype=float)
    start = forward_kinematics(model, q)

    n = int(np.floor(traj.t[-1] / tick + 1e-9)) + 1
    t = np.arange(n) * tick + traj.t[0]

    disp = (traj.position - traj.position[0]) @ NED_TO_BASE.T * scale
    p_des = start.position + _interp_rows(traj.t, disp, t)
    reach = np.linalg.norm(p_des - start.position, axis=1)
    if reach.max() > workspace_radius:
        k = int(np.argmax(reach))
        raise TrackingError(
            f"desired displacement {reach[k]:.3f} m at t={t[k]:.2f} s exceeds workspace radius {workspace_radius} m"
        )

    if feedforward == "segment":
        seg = np.diff(disp, axis=0) / np.diff(traj.t)[:, None]
        idx = np.clip(np.searchsorted(traj.t, t, side="right") - 1, 0, len(seg) - 1)
        v_ff = seg[idx]
        v_ff[t >= traj.t[-1]] = 0.0
    else:
        v_ff = _interp_rows(traj.t, traj.velocity @ NED_TO_BASE.T * scale, t)

    if track_orientation:
        R0_inv = _ned_rotation(traj.euler[0]).T
        euler_t = _interp_rows(traj.t, traj.euler, t)
        rates_t = _interp_rows(traj.t, traj.euler_rate, t)

    qs = np.empty((n, model.n_joints))
    qdots = np.empty_like(qs)
    pos = np.empty((n, 3))
    vel = np.empty((n, 3))
    rots = np.empty((n, 3, 3))
    smin = np.empty(n)
    cap = model.speed_cap
    for k in range(n):
        frames = link_frames(model, q)
        T = frames[-1]
        pos[k], rots[k] = T[:3, 3], T[:3, :3]
        J = _jacobian_from_frames(frames)
        svd = np.linalg.svd(J, full_matrices=False)
        smin[k] = svd[1][-1]

        v = v_ff[k] + gains.kp * (p_des[k] - pos[k])
        speed = np.linalg.norm(v)
        if speed > cap:
            v *= cap / speed
        if track_orientation:
            R_rel = NED_TO_BASE @ _ned_rotation(euler_t[k]) @ R0_inv @ NED_TO_BASE
            R_des = R_rel @ start.rotation
            w_ff = NED_TO_BASE @ _ned_angular_velocity(euler_t[k], rates_t[k])
            w = w_ff + gains.kr * _rotation_error(R_des, rots[k])
        else:
            w = gains.kr * _rotation_error(start.rotation, rots[k])

        qd = _dls(svd, np.concatenate([v, w]), gains.damping)
        ratio = np.max(np.abs(qd) / model.qdot_max)
        if ratio > 1.0:
            qd /= ratio
        lin = J[:3] @ qd
        lin_speed = np.linalg.norm(lin)
        if lin_speed > cap:
            qd *= cap / lin_speed
            lin = J[:3] @ qd
        qdots[k], vel[k], qs[k] = qd, lin, q
        q = q + qd * tick
        if np.any(q < model.q_min) or np.any(q > model.q_max):
            raise TrackingError(f"joint limit reached at t={t[k]:.2f} s")

    return ArmRun(t, qs, qdots, pos, vel, p_des, smin, rots)
