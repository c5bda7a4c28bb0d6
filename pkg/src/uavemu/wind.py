"""Dryden turbulence generation and mean-wind composition.

Turbulence velocities (u, v, w) are produced by driving three independent
white-noise streams through discretized Dryden shaping filters. The result
is rotated into NED and added to a constant mean wind.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy import signal

from .errors import ParameterError
from .units import FT

Axis = Literal["u", "v", "w"]

# Zero placed at z = -beta cancels the (w*dt)^2/24 magnitude droop of a
# matched pole/zero map with relative degree one.
_HF_ZERO = 5.0 - np.sqrt(24.0)


@dataclass(frozen=True)
class DrydenParams:
    """Dryden model parameters, SI units throughout.

    Length scales are stored in metres; use :meth:`from_feet` for the
    customary feet inputs.
    """

    sigma_u2: float = 0.53
    sigma_v2: float = 0.53
    sigma_w2: float = 0.0
    L_u: float = 200 * FT
    L_v: float = 200 * FT
    L_w: float = 50 * FT
    V_a0: float = float(np.sqrt(5.0))
    dt: float = 0.01
    seed: int = 0

    def __post_init__(self):
        for name in ("sigma_u2", "sigma_v2", "sigma_w2"):
            if not getattr(self, name) >= 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("L_u", "L_v", "L_w", "V_a0", "dt"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")

    @classmethod
    def from_feet(cls, L_u_ft: float, L_v_ft: float, L_w_ft: float, **kwargs) -> "DrydenParams":
        return cls(L_u=L_u_ft * FT, L_v=L_v_ft * FT, L_w=L_w_ft * FT, **kwargs)

    def variance(self, axis: Axis) -> float:
        return {"u": self.sigma_u2, "v": self.sigma_v2, "w": self.sigma_w2}[axis]

    def length_scale(self, axis: Axis) -> float:
        return {"u": self.L_u, "v": self.L_v, "w": self.L_w}[axis]


@dataclass(frozen=True)
class MeanWind:
    u_bar: float = 2.0
    v_bar: float = -1.0
    w_bar: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.vector)):
            raise ParameterError("mean wind components must be finite")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.u_bar, self.v_bar, self.w_bar], dtype=float)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.vector))


@dataclass
class DigitalFilter:
    """Discrete rational filter b(z^-1)/a(z^-1) with persistent delay state."""

    numerator: np.ndarray
    denominator: np.ndarray
    dt: float
    state: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.numerator, dtype=float))
        a = np.atleast_1d(np.asarray(self.denominator, dtype=float))
        if a[0] == 0:
            raise ParameterError("leading denominator coefficient is zero")
        self.numerator = b / a[0]
        self.denominator = a / a[0]
        if self.state is None:
            self.reset()

    @property
    def order(self) -> int:
        return max(len(self.numerator), len(self.denominator)) - 1

    @property
    def is_zero(self) -> bool:
        return not np.any(self.numerator)

    def reset(self) -> None:
        self.state = np.zeros(self.order)

    def poles(self) -> np.ndarray:
        return np.roots(self.denominator)

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Filter ``x``, carrying the delay state across calls."""
        x = np.asarray(x, dtype=float)
        if self.order == 0:
            return self.numerator[0] * x
        b = np.pad(self.numerator, (0, self.order + 1 - len(self.numerator)))
        a = np.pad(self.denominator, (0, self.order + 1 - len(self.denominator)))
        y, self.state = signal.lfilter(b, a, x, zi=self.state)
        return y

    def frequency_response(self, f: np.ndarray) -> np.ndarray:
        """Complex response at physical frequencies ``f`` (Hz)."""
        f = np.atleast_1d(np.asarray(f, dtype=float))
        _, h = signal.freqz(self.numerator, self.denominator, worN=2 * np.pi * f * self.dt)
        return h


def dryden_continuous(params: DrydenParams, axis: Axis) -> tuple[np.ndarray, np.ndarray]:
    """Continuous shaping filter for ``axis`` as (num, den) polynomials in s."""
    sigma = np.sqrt(params.variance(axis))
    L = params.length_scale(axis)
    V = params.V_a0
    a = V / L
    if axis == "u":
        return np.array([sigma * np.sqrt(2 * V / L)]), np.array([1.0, a])
    if axis in ("v", "w"):
        k = sigma * np.sqrt(3 * V / L)
        return np.array([k, k * V / (np.sqrt(3) * L)]), np.array([1.0, 2 * a, a * a])
    raise ParameterError(f"unknown axis {axis!r}")


def dryden_response(params: DrydenParams, axis: Axis, f: np.ndarray) -> np.ndarray:
    """Evaluate the continuous Dryden filter at s = j*2*pi*f."""
    num, den = dryden_continuous(params, axis)
    s = 2j * np.pi * np.asarray(f, dtype=float)
    return np.polyval(num, s) / np.polyval(den, s)


def discretize_dryden(
    params: DrydenParams, axis: Axis, method: Literal["matched", "tustin"] = "matched"
) -> DigitalFilter:
    """Discretize the Dryden filter for one axis at the sample interval ``params.dt``.

    The default ``"matched"`` method maps poles and zeros through
    z = exp(s*dt), adds one compensating zero for the high-frequency droop,
    and normalizes the DC gain to the continuous value. ``"tustin"`` is the
    plain bilinear transform.
    """
    dt = params.dt
    if params.variance(axis) == 0:
        return DigitalFilter(np.array([0.0]), np.array([1.0]), dt)

    num, den = dryden_continuous(params, axis)
    if method == "tustin":
        b, a = signal.bilinear(num, den, fs=1.0 / dt)
        return DigitalFilter(b, a, dt)
    if method != "matched":
        raise ParameterError(f"unknown discretization method {method!r}")

    zeros = np.roots(num)
    poles = np.roots(den)
    b = np.real(np.poly(np.exp(zeros * dt)))
    # relative degree of every Dryden filter is one
    b = np.convolve(b, [1.0, _HF_ZERO])
    a = np.real(np.poly(np.exp(poles * dt)))
    dc_target = num[-1] / den[-1]
    b *= dc_target * np.sum(a) / np.sum(b)
    return DigitalFilter(b, a, dt)


@dataclass
class TurbulenceSeries:
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    V_w: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.t)
        if not (len(self.u) == len(self.v) == len(self.w) == n):
            raise ParameterError("turbulence arrays must share the time grid length")
        if self.V_w is not None and self.V_w.shape != (n, 3):
            raise ParameterError("V_w must have shape (n, 3)")
        if n > 1:
            steps = np.diff(self.t)
            if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise ParameterError("time grid must be uniform and strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else float("nan")

    @property
    def uvw(self) -> np.ndarray:
        return np.column_stack([self.u, self.v, self.w])

    def wind_at(self, time: float) -> np.ndarray:
        """Zero-order-hold lookup of the composed NED wind."""
        if self.V_w is None:
            raise ParameterError("wind has not been composed with a mean wind")
        k = int(np.floor((time - self.t[0]) / self.dt + 1e-9))
        return self.V_w[min(max(k, 0), len(self.t) - 1)]


def generate_turbulence(
    filters: Sequence[DigitalFilter], n: int, seed: int | np.random.SeedSequence = 0
) -> TurbulenceSeries:
    """Filter three independent unit white-noise streams through ``filters``.

    Noise is scaled by 1/sqrt(dt) so the discrete samples approximate
    unit-intensity continuous white noise, which gives each output the
    continuous-time variance of its shaping filter.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if len(filters) != 3:
        raise ParameterError("need exactly three filters (u, v, w)")
    dt = filters[0].dt
    if any(not np.isclose(f.dt, dt) for f in filters):
        raise ParameterError("filters must share one sample interval")

    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    out = []
    for filt, child in zip(filters, ss.spawn(3)):
        filt.reset()
        noise = np.random.default_rng(child).standard_normal(n) / np.sqrt(dt)
        out.append(filt(noise))
    t = np.arange(n) * dt
    return TurbulenceSeries(t, *out)


def wind_frame(mean: MeanWind) -> np.ndarray:
    """Rotation taking (u, v, w) turbulence axes into NED.

    u follows the horizontal mean-wind heading, w points down and v
    completes the right-handed triad. Falls back to north for calm air.
    """
    # atan2 keeps the frame orthonormal even for vanishingly small winds
    heading = np.arctan2(mean.v_bar, mean.u_bar)
    x = np.array([np.cos(heading), np.sin(heading), 0.0])
    z = np.array([0.0, 0.0, 1.0])
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


def compose_wind(
    mean: MeanWind, turb: TurbulenceSeries, R: np.ndarray | None = None
) -> TurbulenceSeries:
    if R is None:
        R = wind_frame(mean)
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ParameterError("R must be 3x3")
    if not np.allclose(R.T @ R, np.eye(3), atol=1e-9) or not np.isclose(np.linalg.det(R), 1.0, atol=1e-9):
        raise ParameterError("R must be a proper rotation")
    V_w = mean.vector + turb.uvw @ R.T
    return TurbulenceSeries(turb.t, turb.u, turb.v, turb.w, V_w)


def dryden_wind(
    params: DrydenParams,
    mean: MeanWind,
    n: int,
    seed: int | np.random.SeedSequence | None = None,
    method: Literal["matched", "tustin"] = "matched",
) -> TurbulenceSeries:
    """Turbulence plus mean wind in one call."""
    filters = [discretize_dryden(params, ax, method) for ax in ("u", "v", "w")]
    turb = generate_turbulence(filters, n, params.seed if seed is None else seed)
    return compose_wind(mean, turb)
