"""End-to-end campaign: wind -> hover -> arm -> channel -> cable -> de-embed -> analysis.

Every stage function takes the campaign config plus the (distance, sweep)
indices it needs for seeding, so the CLI can run stages one file at a time
and reproduce the in-process result exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as csvio
from .analysis import (
    DopplerSpectrum,
    DopplerSpread,
    Overlay,
    PathLossFit,
    detect_idle,
    doppler_spectrum,
    doppler_spread,
    feet_to_m,
    fit_path_loss,
    overlay_theoretical,
    radial_velocity,
    velocity_pdf,
)
from .arm import ArmRun, sawyer_like, track_trajectory
from .calibration import (
    ErrorTerms,
    deembed,
    embed_cable,
    measure_standards,
    solve_sol,
    transmission_from_terms,
    wandering_cable,
)
from .channel import S21Series, resample_path, synthesize_s21
from .config import CampaignConfig, derive_seed
from .errors import EmulationError
from .quadcopter import Trajectory, simulate_hover
from .units import FT
from .wind import TurbulenceSeries, dryden_wind

WAYPOINT = (0.0, 0.0, 0.0, 0.0)
EXPORT_DT = 0.1


# ------------------------------------------------------------------ stages


def hover_duration(cfg: CampaignConfig) -> float:
    """Trajectory length: the motion window rounded up to the 10 Hz export grid."""
    return math.ceil(cfg.motion_duration / EXPORT_DT - 1e-9) * EXPORT_DT


def stage_wind(cfg: CampaignConfig, i: int = 0, j: int = 0) -> TurbulenceSeries:
    n = int(math.ceil(hover_duration(cfg) / cfg.dryden.dt)) + 2
    return dryden_wind(cfg.dryden, cfg.mean_wind, n, seed=derive_seed(cfg.seed, "wind", i, j))


def stage_hover(cfg: CampaignConfig, wind: TurbulenceSeries) -> Trajectory:
    return simulate_hover(cfg.quad, wind, WAYPOINT, hover_duration(cfg), gains=cfg.gains, export_dt=EXPORT_DT)


def stage_arm(cfg: CampaignConfig, traj: Trajectory) -> ArmRun:
    return track_trajectory(sawyer_like(), traj, cfg.tracking, scale=cfg.arm_scale)


def receiver_path(cfg: CampaignConfig, t: np.ndarray, position: np.ndarray, tick: float = 0.01) -> np.ndarray:
    """Receiver positions on the sounder grid.

    The receiver sits still for ``cfg.idle_lead`` seconds (held at the first
    logged pose, sampled at the arm tick) before the logged motion starts.
    """
    t = np.asarray(t, dtype=float)
    position = np.asarray(position, dtype=float)
    n_idle = int(round(cfg.idle_lead / tick))
    t_idle = np.arange(n_idle) * tick
    t_log = np.concatenate([t_idle, t - t[0] + cfg.idle_lead])
    p_log = np.vstack([np.repeat(position[:1], n_idle, axis=0), position])
    return resample_path(t_log, p_log, cfg.sounder.time_grid())


def tx_position(cfg: CampaignConfig, start: np.ndarray, distance_ft: float) -> np.ndarray:
    """Transmitter on the arm's +x axis, ``distance_ft`` from the receiver start, slightly lower."""
    return np.asarray(start, dtype=float) + np.array([distance_ft * FT, 0.0, cfg.tx_height_offset])


def shadow_draw(cfg: CampaignConfig, i: int) -> float:
    """Shadowing belongs to the location, so all sweeps at one distance share it."""
    sigma = cfg.channel.shadow_sigma_dB
    if sigma <= 0:
        return 0.0
    return float(np.random.default_rng(derive_seed(cfg.seed, "shadow", i, 0)).normal(0.0, sigma))


def stage_channel(cfg: CampaignConfig, rx: np.ndarray, distance_ft: float, i: int = 0, j: int = 0) -> S21Series:
    tx = tx_position(cfg, rx[0], distance_ft)
    return synthesize_s21(
        rx,
        tx,
        cfg.sounder,
        cfg.channel,
        seed=derive_seed(cfg.seed, "channel", i, j),
        shadow_db=shadow_draw(cfg, i),
        distance_ft=distance_ft,
    )


def _cable(cfg: CampaignConfig, rx: np.ndarray, seed, repeatable: bool):
    c = cfg.cable
    return wandering_cable(
        cfg.sounder.n_points,
        cfg.sounder.Ts,
        seed,
        motion_disp=np.linalg.norm(rx - rx[0], axis=1),
        base_loss_dB=c.base_loss_dB,
        phase_range_deg=None if repeatable else c.phase_range_deg,
        mag_range_dB=None if repeatable else c.mag_range_dB,
        corr_time=c.corr_time,
        reflection_dB=c.reflection_dB,
    )


def stage_calibrate(
    cfg: CampaignConfig, s21: S21Series, rx: np.ndarray, i: int = 0, j: int = 0
) -> tuple[S21Series, S21Series, ErrorTerms]:
    """Embed this run's cable, SOL-characterize the repeatable cable, de-embed.

    The run cable carries a non-repeatable wander on top of the motion
    term. Characterization happens on a separate pass over the same motion,
    so it only sees the repeatable part; the difference is what the
    repeatability figures measure.
    """
    run_cable = _cable(cfg, rx, derive_seed(cfg.seed, "cable", i, j), repeatable=False)
    measured = embed_cable(s21, run_cable)
    char_cable = _cable(cfg, rx, derive_seed(cfg.seed, "cable", i, j), repeatable=True)
    terms = solve_sol(
        *measure_standards(
            char_cable, cfg.sounder.noise_power, derive_seed(cfg.seed, "sol", i, j), cfg.cable.averages
        )
    )
    estimate = transmission_from_terms(terms, reference=char_cable.s21[0])
    return measured, deembed(measured, estimate), terms


# ------------------------------------------------------------------ results


@dataclass
class SweepResult:
    distance_ft: float
    sweep: int
    s21: S21Series
    spectrum: DopplerSpectrum
    spread: DopplerSpread
    motion: ArmRun
    radial_velocity: np.ndarray
    terms: ErrorTerms | None = None


@dataclass
class DistanceResult:
    index: int
    distance_ft: float
    sweeps: list[SweepResult] = field(default_factory=list)
    spread: DopplerSpread | None = None
    pg_dB: float = float("nan")
    overlay: Overlay | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class CampaignResult:
    config: CampaignConfig
    distances: list[DistanceResult]
    fit: PathLossFit | None
    fit_error: str | None = None
    files: list[Path] = field(default_factory=list)

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()

    @property
    def ok(self) -> bool:
        return all(d.ok for d in self.distances) and self.fit is not None

    @property
    def errors(self) -> dict[float, str]:
        return {d.distance_ft: d.error for d in self.distances if d.error}

    def spread_table(self) -> np.ndarray:
        rows = [(d.distance_ft, d.spread.f_neg, d.spread.f_pos) for d in self.distances if d.ok]
        return np.array(rows, dtype=float).reshape(-1, 3)

    def average_spread(self) -> tuple[float, float]:
        tab = self.spread_table()
        return float(tab[:, 1].mean()), float(tab[:, 2].mean())

    def result_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.config_hash.encode())
        for d in self.distances:
            h.update(np.float64(d.distance_ft).tobytes())
            if not d.ok:
                h.update(d.error.encode())
                continue
            h.update(np.array([d.spread.f_neg, d.spread.f_pos, d.pg_dB]).tobytes())
            for s in d.sweeps:
                h.update(s.s21.samples.tobytes())
                h.update(s.spectrum.power_dB.tobytes())
        if self.fit is not None:
            h.update(np.array([self.fit.n_exp, self.fit.pg_d0_dB, self.fit.sigma_dB]).tobytes())
        return h.hexdigest()


# ------------------------------------------------------------------ runner


def run_sweep(cfg: CampaignConfig, i: int, j: int, distance_ft: float) -> SweepResult:
    wind = stage_wind(cfg, i, j)
    traj = stage_hover(cfg, wind)
    motion = stage_arm(cfg, traj)
    rx = receiver_path(cfg, motion.t, motion.position)
    raw = stage_channel(cfg, rx, distance_ft, i, j)
    _, clean, terms = stage_calibrate(cfg, raw, rx, i, j)
    a = cfg.analysis
    spec = doppler_spectrum(clean)
    spread = doppler_spread(spec, a.threshold_dB, relative=a.relative)
    v_rad = radial_velocity(motion.position, motion.velocity, tx_position(cfg, rx[0], distance_ft))
    return SweepResult(distance_ft, j, clean, spec, spread, motion, v_rad, terms)


def combine_spreads(spreads: list[DopplerSpread], how: str = "extreme") -> DopplerSpread:
    """One spread per distance: outermost over the sweeps, or their mean."""
    neg = np.array([s.f_neg for s in spreads])
    pos = np.array([s.f_pos for s in spreads])
    thr = spreads[0].threshold_dB
    if how == "extreme":
        return DopplerSpread(float(neg.min()), float(pos.max()), thr)
    return DopplerSpread(float(neg.mean()), float(pos.mean()), thr)


def run_distance(cfg: CampaignConfig, i: int) -> DistanceResult:
    d = cfg.distances_ft[i]
    out = DistanceResult(i, d)
    try:
        out.sweeps = [run_sweep(cfg, i, j, d) for j in range(cfg.sweeps)]
        out.spread = combine_spreads([s.spread for s in out.sweeps], cfg.analysis.sweep_combine)
        idle = detect_idle(
            [s.s21 for s in out.sweeps],
            cfg.sounder.noise_power,
            window=cfg.analysis.idle_window,
            factor=cfg.analysis.idle_factor,
        )
        out.pg_dB = idle.mean_power_dB
        first = out.sweeps[0]
        out.overlay = overlay_theoretical(
            first.spectrum, velocity_pdf(first.radial_velocity, cfg.analysis.pdf_bin), cfg.sounder.f_c
        )
    except (EmulationError, ArithmeticError, ValueError) as exc:
        out.error = f"{type(exc).__name__}: {exc}"
        out.sweeps = []
    return out


def plan(cfg: CampaignConfig) -> str:
    """Human-readable execution plan for ``--dry-run``."""
    lines = [
        f"config hash   {cfg.config_hash()}",
        f"seed          {cfg.seed}",
        f"distances ft  {', '.join(f'{d:g}' for d in cfg.distances_ft)}",
        f"sweeps        {cfg.sweeps} per distance ({len(cfg.distances_ft) * cfg.sweeps} total)",
        f"sweep         {cfg.sounder.n_points} points x {cfg.sounder.Ts * 1e3:g} ms = {cfg.sounder.duration:.4f} s"
        f" (idle lead {cfg.idle_lead:g} s)",
        f"channel       PG(d0) {cfg.channel.pg_d0_dB:g} dB, n {cfg.channel.n_exp:g},"
        f" shadowing {cfg.channel.shadow_sigma_dB:g} dB, floor {cfg.sounder.noise_floor_dB:g} dB",
        f"threshold     {cfg.analysis.threshold_dB:g} dB ({'relative' if cfg.analysis.relative else 'absolute'})",
        "stages        wind -> hover -> arm -> channel -> cable embed -> SOL de-embed -> spectrum/spread",
        "              then idle detection -> path-loss fit, velocity pdf overlay",
        "seeding       SeedSequence(seed, spawn_key=(stage, distance index, sweep index))",
    ]
    return "\n".join(lines)


def run_campaign(cfg: CampaignConfig, out_dir: str | Path | None = None, parallel: int = 1) -> CampaignResult:
    """Run every distance; a failing distance is recorded and skipped."""
    idx = range(len(cfg.distances_ft))
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            distances = list(pool.map(run_distance, [cfg] * len(idx), idx))
    else:
        distances = [run_distance(cfg, i) for i in idx]

    good = [d for d in distances if d.ok]
    fit, fit_error = None, None
    try:
        fit = fit_path_loss(feet_to_m([d.distance_ft for d in good]), [d.pg_dB for d in good])
    except EmulationError as exc:
        fit_error = f"{type(exc).__name__}: {exc}"
    result = CampaignResult(cfg, distances, fit, fit_error)
    if out_dir is not None:
        result.files = write_campaign(result, out_dir)
    return result


def _label(d: float) -> str:
    return f"{d:g}ft"


def write_campaign(result: CampaignResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    files: list[Path] = []
    for d in result.distances:
        for s in d.sweeps:
            stem = f"d{_label(d.distance_ft)}_s{s.sweep}"
            files.append(csvio.write_s21(out / "s21" / f"{stem}.csv", s.s21))
            files.append(csvio.write_spectrum(out / "spectra" / f"{stem}.csv", s.spectrum))
            files.append(csvio.write_motion(out / "motion" / f"{stem}.csv", s.motion))
            files.append(csvio.write_error_terms(out / "error_terms" / f"{stem}.csv", s.s21.t, s.terms))
        if d.overlay is not None:
            ov = d.overlay
            files.append(
                csvio.write_table(
                    out / "overlay" / f"d{_label(d.distance_ft)}.csv",
                    csvio.OVERLAY_COLUMNS,
                    np.column_stack([ov.freq, ov.measured_dB, ov.theoretical_dB]),
                    [f"offset_dB = {ov.offset_dB!r}"],
                )
            )
    files.append(csvio.write_spread_table(out / "spread_table.csv", result.spread_table()))
    sweep_rows = [(d.distance_ft, s.sweep, s.spread.f_neg, s.spread.f_pos) for d in result.distances for s in d.sweeps]
    files.append(
        csvio.write_table(
            out / "spread_sweeps.csv",
            ("distance_ft", "sweep", "f_neg_hz", "f_pos_hz"),
            np.array(sweep_rows, dtype=float).reshape(-1, 4),
        )
    )
    good = [d for d in result.distances if d.ok]
    files.append(csvio.write_pathgain(out / "pathgain.csv", [d.distance_ft for d in good], [d.pg_dB for d in good]))
    if result.fit is not None:
        files.append(csvio.atomic_write(out / "pathloss_fit.txt", result.fit.report()))
    provenance = {
        "config_hash": result.config_hash,
        "result_hash": result.result_hash(),
        "seed": result.config.seed,
        "seed_derivation": "SeedSequence(seed, spawn_key=(stage, distance_index, sweep_index))",
        "stages": {"wind": 0, "cable": 1, "sol": 2, "channel": 3, "shadow": 4},
        "errors": {f"{k:g}": v for k, v in result.errors.items()},
        "fit_error": result.fit_error,
        "config": result.config.to_dict(),
    }
    files.append(csvio.atomic_write(out / "provenance.json", json.dumps(provenance, indent=2, sort_keys=True) + "\n"))
    return files
