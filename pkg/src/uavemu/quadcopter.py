"""Closed-loop hovering quadcopter under wind.

State vector layout (12): NED position, NED velocity, roll/pitch/yaw,
body rates p/q/r. Drag is quadratic in the air-relative velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, ParameterError, SingularityError
from .wind import TurbulenceSeries

STATE_FIELDS = (
    "p_n", "p_e", "p_d",
    "v_n", "v_e", "v_d",
    "phi", "theta", "psi",
    "omega_p", "omega_q", "omega_r",
)  # fmt: skip


@dataclass(frozen=True)
class QuadParams:
    m: float = 1.0
    J_x: float = 0.01
    J_y: float = 0.01
    J_z: float = 0.02
    C_d: np.ndarray = field(default_factory=lambda: 0.1 * np.eye(3))
    g: float = 9.81

    def __post_init__(self):
        if self.m <= 0 or min(self.J_x, self.J_y, self.J_z) <= 0:
            raise ParameterError("mass and inertias must be positive")
        C = np.asarray(self.C_d, dtype=float)
        if C.ndim == 0:
            C = float(C) * np.eye(3)
        elif C.shape == (3,):
            C = np.diag(C)
        if C.shape != (3, 3) or np.any(C < 0):
            raise ParameterError("C_d must be a 3x3 matrix with non-negative entries")
        object.__setattr__(self, "C_d", C)

    @property
    def hover_thrust(self) -> float:
        return self.m * self.g


@dataclass(frozen=True)
class ControlInput:
    F: float
    tau_phi: float = 0.0
    tau_theta: float = 0.0
    tau_psi: float = 0.0

    def __post_init__(self):
        if self.F < 0:
            raise ParameterError("thrust must be non-negative")


@dataclass(frozen=True)
class QuadState:
    p_n: float = 0.0
    p_e: float = 0.0
    p_d: float = 0.0
    v_n: float = 0.0
    v_e: float = 0.0
    v_d: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0
    omega_p: float = 0.0
    omega_q: float = 0.0
    omega_r: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in STATE_FIELDS])

    @classmethod
    def from_array(cls, x) -> "QuadState":
        return cls(*map(float, x))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.p_n, self.p_e, self.p_d])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.v_n, self.v_e, self.v_d])


def _derivative(x, F, tp, tt, ts, wn, we, wd, m, Jx, Jy, Jz, C, g):
    _, _, _, vn, ve, vd, phi, theta, psi, p, q, r = x
    if abs(theta) >= 0.5 * math.pi:
        raise SingularityError(f"pitch {theta:.6f} rad reached the Euler singularity")
    cph, sph = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(theta), math.sin(theta)
    cps, sps = math.cos(psi), math.sin(psi)
    tth = sth / cth

    rn, re, rd = wn - vn, we - ve, wd - vd
    qn, qe, qd = rn * abs(rn), re * abs(re), rd * abs(rd)
    fdn = C[0][0] * qn + C[0][1] * qe + C[0][2] * qd
    fde = C[1][0] * qn + C[1][1] * qe + C[1][2] * qd
    fdd = C[2][0] * qn + C[2][1] * qe + C[2][2] * qd

    Fm = F / m
    return (
        vn,
        ve,
        vd,
        (-cph * sth * cps - sph * sps) * Fm + fdn / m,
        (-cph * sth * sps + sph * cps) * Fm + fde / m,
        g - cph * cth * Fm + fdd / m,
        p + sph * tth * q + cph * tth * r,
        cph * q - sph * r,
        (sph * q + cph * r) / cth,
        (Jy - Jz) / Jx * q * r + tp / Jx,
        (Jz - Jx) / Jy * p * r + tt / Jy,
        (Jx - Jy) / Jz * p * q + ts / Jz,
    )


def _unpack(params: QuadParams):
    return (params.m, params.J_x, params.J_y, params.J_z, params.C_d.tolist(), params.g)


def quad_derivatives(state, u: ControlInput, wind, params: QuadParams) -> np.ndarray:
    """Time derivative of the 12-element state.

    ``state`` may be a :class:`QuadState` or a length-12 array.
    """
    x = state.as_array() if isinstance(state, QuadState) else np.asarray(state, dtype=float)
    wn, we, wd = (float(c) for c in np.asarray(wind, dtype=float))
    return np.array(
        _derivative(tuple(x), u.F, u.tau_phi, u.tau_theta, u.tau_psi, wn, we, wd, *_unpack(params))
    )


def _rk4(x, h, args):
    k1 = _derivative(x, *args)
    x2 = tuple(a + 0.5 * h * b for a, b in zip(x, k1))
    k2 = _derivative(x2, *args)
    x3 = tuple(a + 0.5 * h * b for a, b in zip(x, k2))
    k3 = _derivative(x3, *args)
    x4 = tuple(a + h * b for a, b in zip(x, k3))
    k4 = _derivative(x4, *args)
    return tuple(
        a + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)
    )


def rk4_step(state, u: ControlInput, wind, params: QuadParams, h: float):
    """One classical Runge-Kutta step with control and wind held constant."""
    if h <= 0:
        raise ParameterError("step must be positive")
    as_state = isinstance(state, QuadState)
    x = tuple(state.as_array()) if as_state else tuple(map(float, state))
    wn, we, wd = (float(c) for c in np.asarray(wind, dtype=float))
    args = (u.F, u.tau_phi, u.tau_theta, u.tau_psi, wn, we, wd, *_unpack(params))
    out = _rk4(x, h, args)
    return QuadState(*out) if as_state else np.array(out)


@dataclass(frozen=True)
class HoverGains:
    kp_xy: float = 3.0
    ki_xy: float = 1.0
    kd_xy: float = 3.0
    kp_z: float = 6.75
    ki_z: float = 3.375
    kd_z: float = 4.5
    kp_att: float = 144.0
    kd_att: float = 19.2
    kp_yaw: float = 16.0
    kd_yaw: float = 8.0
    max_tilt: float = 0.5
    max_thrust_ratio: float = 2.5
    max_tau_xy: float = 1.0
    max_tau_z: float = 0.2
    max_integral: float = 5.0


def _clip(x, lo, hi):
    return lo if x < lo else hi if x > hi else x


class HoverController:
    """Cascaded PID: position loops set tilt and thrust, attitude loops set moments."""

    def __init__(self, params: QuadParams | None = None, gains: HoverGains | None = None):
        self.params = params or QuadParams()
        self.gains = gains or HoverGains()
        self.reset()

    def reset(self) -> None:
        self.integral = [0.0, 0.0, 0.0]

    def __call__(self, state, waypoint, dt: float = 0.0) -> ControlInput:
        x = state.as_array() if isinstance(state, QuadState) else state
        return self._control(tuple(map(float, x)), tuple(map(float, waypoint)), dt)

    def _control(self, x, waypoint, dt):
        P, G = self.params, self.gains
        pn, pe, pd, vn, ve, vd, phi, theta, psi, p, q, r = x
        wn, we, wd = waypoint[:3]
        yaw_ref = waypoint[3] if len(waypoint) > 3 else 0.0
        en, ee, ed = wn - pn, we - pe, wd - pd
        if dt > 0:
            lim = G.max_integral
            self.integral = [
                _clip(self.integral[0] + en * dt, -lim, lim),
                _clip(self.integral[1] + ee * dt, -lim, lim),
                _clip(self.integral[2] + ed * dt, -lim, lim),
            ]
        In, Ie, Id = self.integral

        an = G.kp_xy * en + G.ki_xy * In - G.kd_xy * vn
        ae = G.kp_xy * ee + G.ki_xy * Ie - G.kd_xy * ve
        ad = G.kp_z * ed + G.ki_z * Id - G.kd_z * vd

        cph, cth = math.cos(phi), math.cos(theta)
        F = P.m * (P.g - ad) / max(cph * cth, 0.5)
        F = _clip(F, 0.0, G.max_thrust_ratio * P.m * P.g)

        # small-angle inversion of the translational rows in the heading frame
        c, s = math.cos(psi), math.sin(psi)
        ax = c * an + s * ae
        ay = -s * an + c * ae
        theta_cmd = _clip(-ax / P.g, -G.max_tilt, G.max_tilt)
        phi_cmd = _clip(ay / P.g, -G.max_tilt, G.max_tilt)

        yaw_err = math.atan2(math.sin(yaw_ref - psi), math.cos(yaw_ref - psi))
        tp = P.J_x * (G.kp_att * (phi_cmd - phi) - G.kd_att * p)
        tt = P.J_y * (G.kp_att * (theta_cmd - theta) - G.kd_att * q)
        ts = P.J_z * (G.kp_yaw * yaw_err - G.kd_yaw * r)
        return ControlInput(
            F,
            _clip(tp, -G.max_tau_xy, G.max_tau_xy),
            _clip(tt, -G.max_tau_xy, G.max_tau_xy),
            _clip(ts, -G.max_tau_z, G.max_tau_z),
        )


def pid_hover(state, waypoint, params: QuadParams | None = None, gains: HoverGains | None = None) -> ControlInput:
    """Single controller evaluation with an empty integrator."""
    return HoverController(params, gains)(state, waypoint)


def euler_rates(euler: np.ndarray, body_rates: np.ndarray) -> np.ndarray:
    """Roll/pitch/yaw rates from body rates; rows are samples."""
    euler = np.atleast_2d(euler)
    w = np.atleast_2d(body_rates)
    phi, theta = euler[:, 0], euler[:, 1]
    p, q, r = w.T
    tth = np.tan(theta)
    return np.column_stack(
        [
            p + np.sin(phi) * tth * q + np.cos(phi) * tth * r,
            np.cos(phi) * q - np.sin(phi) * r,
            (np.sin(phi) * q + np.cos(phi) * r) / np.cos(theta),
        ]
    )


@dataclass
class Trajectory:
    """Exported state stream: positions (NED), Euler angles (phi, theta, psi) and rates."""

    t: np.ndarray
    position: np.ndarray
    euler: np.ndarray
    velocity: np.ndarray
    euler_rate: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        for name in ("position", "euler", "velocity", "euler_rate"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n, 3):
                raise ParameterError(f"{name} must have shape ({n}, 3)")
            if not np.all(np.isfinite(arr)):
                raise ParameterError(f"{name} contains non-finite values")
            setattr(self, name, arr)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


def simulate_hover(
    params: QuadParams,
    wind: TurbulenceSeries,
    waypoint,
    duration: float,
    *,
    gains: HoverGains | None = None,
    dt: float = 1e-3,
    export_dt: float = 0.1,
    initial_state: QuadState | None = None,
    settle_time: float = 0.0,
) -> Trajectory:
    """Integrate the closed loop and export samples every ``export_dt`` seconds.

    The vehicle starts at rest on the waypoint (unless ``initial_state`` is
    given). The first ``settle_time`` seconds are simulated but not exported;
    the exported clock restarts at zero.
    """
    if duration <= 0 or dt <= 0:
        raise ParameterError("duration and dt must be positive")
    if wind.V_w is None:
        raise ParameterError("wind series has no composed NED wind")
    stride = int(round(export_dt / dt))
    if stride < 1 or not math.isclose(stride * dt, export_dt, rel_tol=1e-9):
        raise ParameterError("export_dt must be an integer multiple of dt")
    settle_steps = int(round(settle_time / dt))
    n_export = int(math.floor(duration / export_dt + 1e-9)) + 1
    n_steps = settle_steps + (n_export - 1) * stride
    total = n_steps * dt
    if wind.t[0] > 1e-12 or wind.t[-1] + wind.dt < total - 1e-9:
        raise GridError(f"wind covers {wind.t[-1] + wind.dt:.3f} s, need {total:.3f} s")

    waypoint = tuple(map(float, waypoint))
    if len(waypoint) == 3:
        waypoint = waypoint + (0.0,)
    if initial_state is None:
        initial_state = QuadState(*waypoint[:3], psi=waypoint[3])
    ctrl = HoverController(params, gains)
    mpar = _unpack(params)

    wind_idx = np.minimum(np.floor(np.arange(n_steps) * dt / wind.dt + 1e-9).astype(int), len(wind) - 1)
    wind_rows = wind.V_w[wind_idx].tolist()

    x = tuple(initial_state.as_array().tolist())
    rows = np.empty((n_export, 12))
    k_out = 0
    if settle_steps == 0:
        rows[0] = x
        k_out = 1
    for k in range(n_steps):
        u = ctrl._control(x, waypoint, dt)
        wn, we, wd = wind_rows[k]
        x = _rk4(x, dt, (u.F, u.tau_phi, u.tau_theta, u.tau_psi, wn, we, wd, *mpar))
        done = k + 1 - settle_steps
        if done >= 0 and done % stride == 0:
            rows[k_out] = x
            k_out += 1

    euler = rows[:, 6:9]
    return Trajectory(
        t=np.arange(n_export) * export_dt,
        position=rows[:, 0:3],
        euler=euler,
        velocity=rows[:, 3:6],
        euler_rate=euler_rates(euler, rows[:, 9:12]),
    )
