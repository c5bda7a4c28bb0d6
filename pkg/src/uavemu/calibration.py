"""Moving-cable emulation, per-sample SOL characterization and de-embedding.

The cable is a reciprocal two-port whose transmission drifts as the arm
moves. Characterizing it works like adapter characterization on a VNA,
except that every time sample gets its own Short-Open-Load solve instead
of every frequency point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .channel import S21Series
from .errors import CalibrationError, GridError, ParameterError

GAMMA_SHORT = -1.0
GAMMA_OPEN = 1.0
GAMMA_LOAD = 0.0


@dataclass
class CableModel:
    s21: np.ndarray
    s11: np.ndarray
    s22: np.ndarray
    Ts: float
    seed: object = None

    def __post_init__(self):
        self.s21 = np.asarray(self.s21, dtype=complex)
        self.s11 = np.broadcast_to(np.asarray(self.s11, dtype=complex), self.s21.shape).copy()
        self.s22 = np.broadcast_to(np.asarray(self.s22, dtype=complex), self.s21.shape).copy()
        if np.any(np.abs(self.s21) > 1.0 + 1e-12):
            raise ParameterError("cable transmission must be passive (|s21| <= 1)")

    def __len__(self) -> int:
        return len(self.s21)

    @classmethod
    def ideal(cls, n: int, Ts: float) -> "CableModel":
        return cls(np.ones(n), np.zeros(n), np.zeros(n), Ts)


def _smooth_walk(rng: np.random.Generator, n: int, Ts: float, corr_time: float) -> np.ndarray:
    """Random walk low-passed to a bandwidth of 1/corr_time, normalized to [0, 1]."""
    steps = rng.standard_normal(n)
    cutoff = min(0.45, Ts / corr_time)
    b, a = signal.butter(2, cutoff * 2)
    walk = np.cumsum(signal.filtfilt(b, a, steps))
    span = np.ptp(walk)
    return (walk - walk.min()) / span if span > 0 else np.zeros(n)


def wandering_cable(
    n: int,
    Ts: float,
    seed=None,
    *,
    motion_disp: np.ndarray | None = None,
    base_loss_dB: float = -6.0,
    base_phase_deg: float = -40.0,
    phase_per_m_deg: float = 30.0,
    loss_per_m_dB: float = 0.05,
    phase_range_deg: tuple[float, float] | None = (-3.4, 0.0),
    mag_range_dB: tuple[float, float] | None = (-0.026, -0.014),
    corr_time: float = 2.0,
    reflection_dB: float = -25.0,
) -> CableModel:
    """Cable whose transmission follows the arm motion plus a run-specific wander.

    ``motion_disp`` is the receiver displacement from its start pose (m); it
    drives the repeatable bend term. The non-repeatable wander is a smooth
    random walk spanning ``phase_range_deg`` and ``mag_range_dB`` over the
    sweep; pass ``None`` for either to get a cable that repeats exactly.
    """
    rng = np.random.default_rng(seed)
    disp = np.zeros(n) if motion_disp is None else np.asarray(motion_disp, dtype=float)
    if disp.shape != (n,):
        raise GridError(f"motion displacement must have {n} samples")

    phase_deg = base_phase_deg - phase_per_m_deg * disp
    mag_dB = base_loss_dB - loss_per_m_dB * disp
    if phase_range_deg is not None:
        lo, hi = phase_range_deg
        phase_deg = phase_deg + lo + (hi - lo) * _smooth_walk(rng, n, Ts, corr_time)
    if mag_range_dB is not None:
        lo, hi = mag_range_dB
        mag_dB = mag_dB + lo + (hi - lo) * _smooth_walk(rng, n, Ts, corr_time)
    s21 = 10 ** (mag_dB / 20) * np.exp(1j * np.deg2rad(phase_deg))

    refl = 10 ** (reflection_dB / 20)
    s11 = refl * np.exp(1j * (0.3 + 2 * np.pi * _smooth_walk(rng, n, Ts, corr_time)))
    s22 = refl * np.exp(1j * (1.1 + 2 * np.pi * _smooth_walk(rng, n, Ts, corr_time)))
    return CableModel(s21, s11, s22, Ts, seed)


@dataclass
class ErrorTerms:
    """One-port three-term error model per time sample."""

    e00: np.ndarray
    e11: np.ndarray
    e10e01: np.ndarray

    def __post_init__(self):
        self.e00 = np.asarray(self.e00, dtype=complex)
        self.e11 = np.asarray(self.e11, dtype=complex)
        self.e10e01 = np.asarray(self.e10e01, dtype=complex)
        if np.any(np.abs(self.e11) >= 1.0):
            raise CalibrationError("source match |e11| must be below 1")

    def measure(self, gamma) -> np.ndarray:
        """Raw reflection seen through the error box for a termination ``gamma``."""
        gamma = np.asarray(gamma, dtype=complex)
        return self.e00 + self.e10e01 * gamma / (1.0 - self.e11 * gamma)


def solve_sol(gamma_short, gamma_open, gamma_load) -> ErrorTerms:
    """Closed-form Short-Open-Load solve for ideal standards (-1, +1, 0)."""
    ms = np.asarray(gamma_short, dtype=complex)
    mo = np.asarray(gamma_open, dtype=complex)
    ml = np.asarray(gamma_load, dtype=complex)
    if not (ms.shape == mo.shape == ml.shape):
        raise GridError("standards must share one time grid")
    e00 = ml
    a = mo - e00
    b = ms - e00
    denom = a - b
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
    if np.any(np.abs(denom) <= 1e-12 * scale) or np.any(np.abs(denom) == 0):
        raise CalibrationError("short and open measurements coincide; system is degenerate")
    e11 = (a + b) / denom
    e10e01 = a * (1.0 - e11)
    return ErrorTerms(e00, e11, e10e01)


def cable_error_terms(cable: CableModel) -> ErrorTerms:
    """Error box of a calibrated port extended by ``cable`` (reciprocal)."""
    return ErrorTerms(cable.s11, cable.s22, cable.s21 * cable.s21)


def measure_standards(cable: CableModel, noise_power: float = 0.0, seed=None, averages: int = 1):
    """Noisy raw reflections of the three standards at the cable's far end."""
    terms = cable_error_terms(cable)
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(noise_power / 2 / max(1, averages))
    out = []
    for gamma in (GAMMA_SHORT, GAMMA_OPEN, GAMMA_LOAD):
        m = terms.measure(gamma)
        if sigma > 0:
            m = m + sigma * (rng.standard_normal(m.shape) + 1j * rng.standard_normal(m.shape))
        out.append(m)
    return tuple(out)


def transmission_from_terms(terms: ErrorTerms, reference: complex | None = None) -> np.ndarray:
    """Cable s21 as the phase-continuous square root of e10e01.

    ``reference`` picks the root branch at the first sample (nearest in
    phase); the branch is then followed sample to sample.
    """
    root = np.sqrt(terms.e10e01)
    if root.size > 1:
        flips = np.real(root[1:] * np.conj(root[:-1])) < 0
        parity = np.concatenate([[False], np.logical_xor.accumulate(flips)])
        root = np.where(parity, -root, root)
    if reference is not None and np.real(root.flat[0] * np.conj(reference)) < 0:
        root = -root
    return root


def characterize_cable(
    cable: CableModel, noise_power: float = 0.0, seed=None, averages: int = 16, reference: complex | None = None
) -> np.ndarray:
    """SOL-characterize ``cable`` sample by sample and return its transmission estimate."""
    terms = solve_sol(*measure_standards(cable, noise_power, seed, averages))
    if reference is None:
        reference = cable.s21[0]
    return transmission_from_terms(terms, reference)


def _transmission(cable) -> np.ndarray:
    return cable.s21 if isinstance(cable, CableModel) else np.asarray(cable, dtype=complex)


def embed_cable(s21: S21Series, cable: CableModel) -> S21Series:
    t = _transmission(cable)
    if t.shape != s21.samples.shape:
        raise GridError(f"cable has {t.shape[0]} samples, sweep has {len(s21.samples)}")
    return s21.with_samples(s21.samples * t)


def deembed(s21_measured: S21Series, cable, guard: float = 1e-6) -> S21Series:
    """Divide out the characterized cable transmission sample by sample."""
    t = _transmission(cable)
    if t.shape != s21_measured.samples.shape:
        raise GridError(f"cable has {t.shape[0]} samples, sweep has {len(s21_measured.samples)}")
    if np.any(np.abs(t) < guard):
        raise CalibrationError(f"cable transmission below {guard:g}; refusing to divide")
    return s21_measured.with_samples(s21_measured.samples / t)


def repeatability(runs, reference, smooth: int = 128) -> dict[str, float]:
    """Min/max phase (deg) and magnitude (dB) deviation of ``runs`` from ``reference``.

    Each run is smoothed with a ``smooth``-sample moving average (full
    windows only) before the comparison, like trace smoothing on a VNA.
    """
    ref = np.asarray(reference, dtype=complex)
    ph, mag = [], []
    for run in runs:
        x = run.samples if isinstance(run, S21Series) else np.asarray(run, dtype=complex)
        ratio = x / ref
        if smooth > 1:
            ratio = np.convolve(ratio, np.full(smooth, 1.0 / smooth), mode="valid")
        ph.append(np.rad2deg(np.angle(ratio)))
        mag.append(20 * np.log10(np.abs(ratio)))
    ph = np.concatenate(ph)
    mag = np.concatenate(mag)
    return {
        "phase_min_deg": float(ph.min()),
        "phase_max_deg": float(ph.max()),
        "mag_min_dB": float(mag.min()),
        "mag_max_dB": float(mag.max()),
    }


def repeatability_test(
    n: int,
    Ts: float,
    noise_power: float,
    seed=0,
    *,
    runs: int = 5,
    motion_disp: np.ndarray | None = None,
    averages: int = 16,
    smooth: int = 128,
    **cable_kw,
) -> dict[str, float]:
    """Thru repeatability: repeat one motion ``runs`` times and de-embed each.

    The cable is characterized once (repeatable part only). Each run sees a
    fresh wander and fresh receiver noise, and the de-embedded thru is
    compared with the ideal unit transmission.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    char_seed, sol_seed, *run_seeds = ss.spawn(2 + runs)
    char = wandering_cable(
        n, Ts, char_seed, motion_disp=motion_disp, phase_range_deg=None, mag_range_dB=None, **cable_kw
    )
    estimate = characterize_cable(char, noise_power, sol_seed, averages)
    out = []
    for rs in run_seeds:
        cable_seed, noise_seed = rs.spawn(2)
        cable = wandering_cable(n, Ts, cable_seed, motion_disp=motion_disp, **cable_kw)
        rng = np.random.default_rng(noise_seed)
        thru = cable.s21 + np.sqrt(noise_power / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        out.append(thru / estimate)
    return repeatability(out, np.ones(n), smooth)
