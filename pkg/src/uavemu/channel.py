"""CW-mode channel sounding: time-varying geometry to complex S21 samples."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GeometryError, GridError, ParameterError
from .units import C0, db_to_amplitude

REFERENCE_IF_BW = 300.0


@dataclass(frozen=True)
class SounderConfig:
    f_c: float = 28e9
    n_points: int = 4096
    Ts: float = 4.4e-3
    if_bandwidth: float = REFERENCE_IF_BW
    noise_floor_dB: float = -60.0

    def __post_init__(self):
        n = int(self.n_points)
        if n < 1 or n & (n - 1):
            raise ParameterError(f"n_points must be a power of two, got {self.n_points}")
        if self.Ts <= 0 or self.f_c <= 0 or self.if_bandwidth <= 0:
            raise ParameterError("Ts, f_c and if_bandwidth must be positive")

    @property
    def wavelength(self) -> float:
        return C0 / self.f_c

    @property
    def duration(self) -> float:
        return self.n_points * self.Ts

    def time_grid(self) -> np.ndarray:
        return np.arange(self.n_points) * self.Ts

    @property
    def noise_power(self) -> float:
        """Linear noise power per sample; the floor scales with IF bandwidth."""
        if not np.isfinite(self.noise_floor_dB):
            return 0.0
        return 10 ** (self.noise_floor_dB / 10) * self.if_bandwidth / REFERENCE_IF_BW


def friis_gain_db(f_c: float, d0: float = 1.0, antenna_gains_dBi: float = 30.0) -> float:
    """Free-space path gain at ``d0`` including both antenna gains."""
    return 20 * np.log10(C0 / f_c / (4 * np.pi * d0)) + antenna_gains_dBi


@dataclass(frozen=True)
class ChannelParams:
    """Log-distance path gain with shadowing.

    The default intercept is free space at 1 m and 28 GHz with two 15 dBi
    horns.
    """

    pg_d0_dB: float = float(np.round(friis_gain_db(28e9), 2))
    n_exp: float = 2.0
    shadow_sigma_dB: float = 0.0
    phi_0: float = 0.0
    d0: float = 1.0

    def __post_init__(self):
        if self.n_exp <= 0:
            raise ParameterError("path-loss exponent must be positive")
        if self.shadow_sigma_dB < 0 or self.d0 <= 0:
            raise ParameterError("shadow sigma must be >= 0 and d0 > 0")

    def path_gain_db(self, d) -> np.ndarray:
        return self.pg_d0_dB - 10 * self.n_exp * np.log10(np.asarray(d, dtype=float) / self.d0)


@dataclass
class S21Series:
    config: SounderConfig
    samples: np.ndarray
    distance_ft: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.ndim != 1 or len(self.samples) != self.config.n_points:
            raise GridError(f"expected {self.config.n_points} samples, got {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise ParameterError("S21 samples must be finite")

    @property
    def t(self) -> np.ndarray:
        return self.config.time_grid()

    def with_samples(self, samples: np.ndarray) -> "S21Series":
        return replace(self, samples=np.asarray(samples, dtype=complex), meta=dict(self.meta))


def cw_response(path_lengths: np.ndarray, gains_db: np.ndarray, wavelength: float, phi_0: float = 0.0) -> np.ndarray:
    """Sum of discrete paths at a single carrier.

    ``path_lengths`` and ``gains_db`` have shape (n_paths, n_samples); each
    path contributes a * exp(-j(2 pi d / lambda + phi_0)).
    """
    d = np.atleast_2d(path_lengths)
    g = np.atleast_2d(gains_db)
    return np.sum(db_to_amplitude(g) * np.exp(-1j * (2 * np.pi * d / wavelength + phi_0)), axis=0)


def synthesize_s21(
    rx_path: np.ndarray,
    tx_pos: Sequence[float],
    cfg: SounderConfig,
    ch: ChannelParams,
    seed=None,
    *,
    shadow_db: float | None = None,
    noise: bool = True,
    distance_ft: float = float("nan"),
    images: Sequence[tuple[Sequence[float], float]] = (),
) -> S21Series:
    """Synthesize one CW sweep for a receiver following ``rx_path``.

    ``rx_path`` must hold exactly ``cfg.n_points`` positions on the sounder
    grid. ``shadow_db`` fixes the shadowing draw; otherwise it is drawn from
    N(0, shadow_sigma_dB). ``images`` adds reflected paths as
    (image source position, extra loss dB); the anechoic default has none.
    """
    rx = np.asarray(rx_path, dtype=float)
    if rx.shape != (cfg.n_points, 3):
        raise GridError(f"rx_path must have shape ({cfg.n_points}, 3), got {rx.shape}; resample it first")
    rng = np.random.default_rng(seed)
    if shadow_db is None:
        shadow_db = rng.normal(0.0, ch.shadow_sigma_dB) if ch.shadow_sigma_dB > 0 else 0.0

    sources = [(np.asarray(tx_pos, dtype=float), 0.0)] + [(np.asarray(p, dtype=float), loss) for p, loss in images]
    lengths, gains = [], []
    for src, extra_loss in sources:
        d = np.linalg.norm(rx - src, axis=1)
        if np.any(d <= 0):
            raise GeometryError("receiver coincides with a source")
        lengths.append(d)
        gains.append(ch.path_gain_db(d) + shadow_db - extra_loss)
    x = cw_response(np.array(lengths), np.array(gains), cfg.wavelength, ch.phi_0)

    if noise and cfg.noise_power > 0:
        sigma = np.sqrt(cfg.noise_power / 2)
        x = x + sigma * (rng.standard_normal(cfg.n_points) + 1j * rng.standard_normal(cfg.n_points))
    return S21Series(cfg, x, distance_ft, {"shadow_db": float(shadow_db)})


def doppler_capture_range(cfg: SounderConfig) -> tuple[float, float]:
    half = 1.0 / (2.0 * cfg.Ts)
    return -half, half


def resample_path(t_log: np.ndarray, positions: np.ndarray, t_grid: np.ndarray) -> np.ndarray:
    """Cubic-spline resampling of a motion log onto the sounder grid."""
    t_log = np.asarray(t_log, dtype=float)
    positions = np.asarray(positions, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_log) < 2:
        raise GridError("motion log needs at least two samples")
    tol = 1e-9 * max(1.0, abs(t_log[-1]))
    if t_grid[0] < t_log[0] - tol or t_grid[-1] > t_log[-1] + tol:
        raise GridError(
            f"motion log spans [{t_log[0]:.4f}, {t_log[-1]:.4f}] s but grid needs [{t_grid[0]:.4f}, {t_grid[-1]:.4f}] s"
        )
    spline = CubicSpline(t_log, positions, axis=0)
    return spline(np.clip(t_grid, t_log[0], t_log[-1]))
