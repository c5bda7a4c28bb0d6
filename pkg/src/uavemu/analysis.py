"""Doppler spectra and spread, velocity statistics, idle detection and path-loss fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .channel import S21Series
from .errors import DetectionError, ParameterError
from .units import C0, FT

# 20*log10 of this is the floor reported for empty bins
_AMPLITUDE_FLOOR = 1e-16


@dataclass
class DopplerSpectrum:
    freqs: np.ndarray
    power_dB: np.ndarray
    X: np.ndarray | None = None

    @property
    def bin_width(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def peak_frequency(self, refine: bool = False) -> float:
        """Frequency of the strongest bin.

        With ``refine=True`` and complex bins available, the peak is
        interpolated between bins with the bias-corrected three-point
        estimator for rectangular windows (exact for a noiseless tone up to
        O(1/N^2)).
        """
        k = int(np.argmax(self.power_dB))
        f = float(self.freqs[k])
        if not refine or self.X is None or k == 0 or k == len(self.freqs) - 1:
            return f
        a, b, c = self.X[k - 1], self.X[k], self.X[k + 1]
        den = 2 * b - a - c
        if den == 0:
            return f
        n = len(self.X)
        delta = float(np.real((a - c) / den)) * np.tan(np.pi / n) / (np.pi / n)
        return f + delta * self.bin_width


def dft(x: np.ndarray) -> np.ndarray:
    """X[k] = (1/N) sum_n x[n] exp(-j 2 pi k n / N)."""
    x = np.asarray(x, dtype=complex)
    return np.fft.fft(x) / len(x)


def idft(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    return np.fft.ifft(X) * len(X)


def doppler_spectrum(s21, Ts: float | None = None, *, strict: bool = True, window: str | None = None) -> DopplerSpectrum:
    """Centre-shifted 1/N-normalized DFT of an S21 capture.

    Accepts an :class:`S21Series` or a bare sample array with ``Ts``. A
    length that is not a power of two is rejected in strict mode and
    zero-padded otherwise.
    """
    if isinstance(s21, S21Series):
        x, Ts = s21.samples, s21.config.Ts
    else:
        x = np.asarray(s21, dtype=complex)
        if Ts is None:
            raise ParameterError("Ts is required for a bare sample array")
    n = len(x)
    if n & (n - 1):
        if strict:
            raise ParameterError(f"capture length {n} is not a power of two")
        x = np.concatenate([x, np.zeros((1 << n.bit_length()) - n, dtype=complex)])
    if window == "hann":
        w = np.hanning(len(x))
        x = x * w / w.mean()
    elif window is not None:
        raise ParameterError(f"unknown window {window!r}")
    X = np.fft.fftshift(dft(x))
    freqs = np.fft.fftshift(np.fft.fftfreq(len(x), Ts))
    power = 20 * np.log10(np.maximum(np.abs(X), _AMPLITUDE_FLOOR))
    return DopplerSpectrum(freqs, power, X)


@dataclass(frozen=True)
class DopplerSpread:
    f_neg: float
    f_pos: float
    threshold_dB: float

    def __post_init__(self):
        if not self.f_neg <= 0 <= self.f_pos:
            raise ParameterError("spread must satisfy f_neg <= 0 <= f_pos")


def doppler_spread(spec: DopplerSpectrum, threshold_dB: float = -60.0, *, relative: bool = False) -> DopplerSpread:
    """Outermost frequencies on each side whose power exceeds the threshold.

    With ``relative=True`` the threshold is taken below the spectral peak
    rather than as an absolute level.
    """
    level = threshold_dB + (spec.power_dB.max() if relative else 0.0)
    above = spec.power_dB > level
    pos = spec.freqs[above & (spec.freqs > 0)]
    neg = spec.freqs[above & (spec.freqs < 0)]
    return DopplerSpread(
        float(neg.min()) if neg.size else 0.0,
        float(pos.max()) if pos.size else 0.0,
        float(threshold_dB),
    )


def theoretical_doppler(v, theta=0.0, f_c: float = 28e9):
    """f_D = (v / lambda) cos(theta); positive ``v`` is motion toward the transmitter."""
    if f_c <= 0:
        raise ParameterError("carrier frequency must be positive")
    return np.asarray(v, dtype=float) * np.cos(theta) * f_c / C0 if np.ndim(v) else float(v * np.cos(theta) * f_c / C0)


def radial_velocity(positions: np.ndarray, velocities: np.ndarray, tx_pos) -> np.ndarray:
    """Velocity component toward the transmitter."""
    los = np.asarray(tx_pos, dtype=float) - np.asarray(positions, dtype=float)
    los /= np.linalg.norm(los, axis=1, keepdims=True)
    return np.sum(np.asarray(velocities, dtype=float) * los, axis=1)


@dataclass
class VelocityPdf:
    edges: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        if np.any(self.density < 0):
            raise ParameterError("densities must be non-negative")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def mass(self) -> np.ndarray:
        return self.density * self.widths

    def modes(self, min_separation: float = 0.2) -> np.ndarray:
        """Local maxima of the density, strongest first, at least ``min_separation`` apart."""
        d = self.density
        peaks = [i for i in range(len(d)) if d[i] > 0 and (i == 0 or d[i] >= d[i - 1]) and (i == len(d) - 1 or d[i] >= d[i + 1])]
        out: list[float] = []
        for i in sorted(peaks, key=lambda i: -d[i]):
            c = self.centers[i]
            if all(abs(c - o) >= min_separation for o in out):
                out.append(float(c))
        return np.array(out)


def velocity_pdf(velocities, bin_width: float = 0.02) -> VelocityPdf:
    """Normalized histogram on a grid aligned to multiples of ``bin_width``."""
    v = np.asarray(velocities, dtype=float).ravel()
    if v.size == 0:
        raise ParameterError("velocity log is empty")
    if bin_width <= 0:
        raise ParameterError("bin width must be positive")
    lo = np.floor(v.min() / bin_width)
    hi = np.floor(v.max() / bin_width) + 1
    edges = np.arange(lo, hi + 1) * bin_width
    counts, edges = np.histogram(v, bins=edges)
    density = counts / (counts.sum() * np.diff(edges))
    return VelocityPdf(edges, density)


@dataclass
class Overlay:
    freq: np.ndarray
    measured_dB: np.ndarray
    theoretical_dB: np.ndarray
    offset_dB: float


def overlay_theoretical(spec: DopplerSpectrum, pdf: VelocityPdf, f_c: float = 28e9) -> Overlay:
    """Map the velocity pdf to Doppler frequencies and fit one dB offset to the measured spectrum."""
    mass = pdf.mass
    keep = mass > 0
    if not np.any(keep):
        raise ParameterError("velocity pdf has no mass")
    f = theoretical_doppler(pdf.centers[keep], 0.0, f_c)
    theo = 10 * np.log10(mass[keep])
    idx = np.clip(np.round((f - spec.freqs[0]) / spec.bin_width).astype(int), 0, len(spec.freqs) - 1)
    measured = spec.power_dB[idx]
    offset = float(np.mean(measured - theo))
    return Overlay(spec.freqs[idx], measured, theo + offset, offset)


@dataclass
class IdleDetection:
    mask: np.ndarray
    runs: list[tuple[int, int]]
    mean_power_dB: float


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate([[False], mask, [False]]).astype(int)
    d = np.diff(padded)
    return list(zip(np.flatnonzero(d == 1).tolist(), np.flatnonzero(d == -1).tolist()))


def detect_idle(
    samples,
    noise_power: float,
    window: int = 50,
    factor: float = 3.0,
    min_run: int = 1,
) -> IdleDetection:
    """Flag samples whose local complex variance stays below ``factor`` x noise power.

    The variance is taken over a centred ``window``-sample neighbourhood of
    the complex samples, so phase rotation from motion registers even when
    the magnitude barely changes. Accepts one array, an :class:`S21Series`
    or a sequence of sweeps (appended in order).
    """
    if isinstance(samples, S21Series):
        x = samples.samples
    elif isinstance(samples, (list, tuple)):
        x = np.concatenate([s.samples if isinstance(s, S21Series) else np.asarray(s) for s in samples])
    else:
        x = np.asarray(samples)
    x = x.astype(complex)
    if x.size == 0:
        raise ParameterError("need at least one sample")
    mean_re = ndimage.uniform_filter1d(x.real, window, mode="nearest")
    mean_im = ndimage.uniform_filter1d(x.imag, window, mode="nearest")
    power = ndimage.uniform_filter1d(np.abs(x) ** 2, window, mode="nearest")
    var = power - (mean_re**2 + mean_im**2)
    # the relative term keeps noiseless captures from failing on round-off
    threshold = factor * noise_power + 1e-12 * float(np.mean(np.abs(x) ** 2))
    mask = var < threshold
    runs = [r for r in _runs(mask) if r[1] - r[0] >= min_run]
    mask = np.zeros_like(mask)
    for a, b in runs:
        mask[a:b] = True
    if not runs:
        raise DetectionError(
            f"no idle segment: min local variance {var.min():.3e} vs threshold {threshold:.3e}"
        )
    return IdleDetection(mask, runs, float(10 * np.log10(np.mean(np.abs(x[mask]) ** 2))))


@dataclass(frozen=True)
class PathLossFit:
    n_exp: float
    pg_d0_dB: float
    sigma_dB: float
    r2: float
    d0: float = 1.0

    def report(self) -> str:
        return (
            f"n = {self.n_exp:.6f}\n"
            f"intercept_db = {self.pg_d0_dB:.6f}\n"
            f"sigma_db = {self.sigma_dB:.6f}\n"
            f"r2 = {self.r2:.6f}\n"
            f"d0_m = {self.d0:g}\n"
        )


def fit_path_loss(distances_m, pg_dB, d0: float = 1.0) -> PathLossFit:
    """Least-squares fit of PG(d) = PG(d0) - 10 n log10(d/d0)."""
    d = np.asarray(distances_m, dtype=float)
    y = np.asarray(pg_dB, dtype=float)
    if d.shape != y.shape or d.ndim != 1:
        raise ParameterError("distances and path gains must be matching 1-D arrays")
    if np.any(d <= 0):
        raise ParameterError("distances must be positive")
    if np.unique(d).size < 2:
        raise ParameterError("need at least two distinct distances (rank-deficient fit)")
    x = -10 * np.log10(d / d0)
    A = np.column_stack([x, np.ones_like(x)])
    (n, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (n * x + b)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    sigma = float(np.sqrt(ss_res / len(y)))
    return PathLossFit(float(n), float(b), sigma, float(np.clip(r2, 0.0, 1.0)), d0)


def feet_to_m(ft):
    return np.asarray(ft, dtype=float) * FT
