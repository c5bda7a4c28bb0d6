"""Command-line entry point.

Each stage subcommand reads and writes the CSV interfaces, so a campaign
can be run one stage at a time; ``run-pipeline`` runs everything in
process. Exit codes: 0 success, 1 emulation failure (including any failed
distance), 2 bad input or configuration.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import io as csvio
from . import pipeline
from .analysis import doppler_spectrum, doppler_spread, feet_to_m, fit_path_loss
from .config import CampaignConfig, load_config
from .errors import EmulationError, ParseError


def fixture_path(name: str) -> Path:
    """Path of a bundled data file (``tone_56hz.csv``, ``pathloss_n2.csv``, ``default.ini``)."""
    return Path(str(resources.files("uavemu") / "data" / name))


def _input(path: str) -> Path:
    if path.startswith("fixture:"):
        return fixture_path(path.split(":", 1)[1])
    return Path(path)


def _config(args) -> CampaignConfig:
    cfg = load_config(_input(args.config)) if args.config else CampaignConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _distances(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"distances must be comma-separated feet, got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file (fixture:NAME for bundled files)")
    p.add_argument("--seed", type=int, help="campaign seed (overrides the config)")


def _indices(p: argparse.ArgumentParser) -> None:
    p.add_argument("--index", type=int, default=0, help="distance index used for seeding (default 0)")
    p.add_argument("--sweep", type=int, default=0, help="sweep index used for seeding (default 0)")


# ------------------------------------------------------------------ commands


def cmd_simulate_wind(args) -> int:
    cfg = _config(args)
    wind = pipeline.stage_wind(cfg, args.index, args.sweep)
    csvio.write_turbulence(args.out, wind)
    print(f"wrote {len(wind)} samples at dt={cfg.dryden.dt:g} s to {args.out}")
    return 0


def cmd_simulate_uav(args) -> int:
    cfg = _config(args)
    traj = pipeline.stage_hover(cfg, csvio.read_turbulence(_input(args.wind)))
    csvio.write_trajectory(args.out, traj)
    speed = np.linalg.norm(traj.velocity[:, :2], axis=1).max()
    print(f"wrote {len(traj)} samples to {args.out}; peak horizontal speed {speed:.4f} m/s")
    return 0


def cmd_emulate_arm(args) -> int:
    cfg = _config(args)
    run = pipeline.stage_arm(cfg, csvio.read_trajectory(_input(args.trajectory)))
    csvio.write_motion(args.out, run)
    print(f"wrote {len(run.t)} ticks to {args.out}; RMS tracking error {np.sqrt(np.mean(run.tracking_error**2)):.3e} m")
    return 0


def cmd_sound_channel(args) -> int:
    cfg = _config(args)
    m = csvio.read_motion(_input(args.motion))
    rx = pipeline.receiver_path(cfg, m["t"], m["position"])
    s21 = pipeline.stage_channel(cfg, rx, args.distance_ft, args.index, args.sweep)
    csvio.write_s21(args.out, s21)
    print(f"wrote {cfg.sounder.n_points} samples at {args.distance_ft:g} ft to {args.out}")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    s21 = csvio.read_s21(_input(args.s21))
    m = csvio.read_motion(_input(args.motion))
    rx = pipeline.receiver_path(cfg, m["t"], m["position"])
    measured, clean, terms = pipeline.stage_calibrate(cfg, s21, rx, args.index, args.sweep)
    csvio.write_s21(args.out, clean)
    if args.terms:
        csvio.write_error_terms(args.terms, clean.t, terms)
    if args.measured:
        csvio.write_s21(args.measured, measured)
    print(f"wrote de-embedded sweep to {args.out}")
    return 0


def cmd_analyze_doppler(args) -> int:
    s21 = csvio.read_s21(_input(args.s21))
    spec = doppler_spectrum(s21)
    spread = doppler_spread(spec, args.threshold_db, relative=args.relative)
    if args.out:
        csvio.write_spectrum(args.out, spec)
    print(f"peak {spec.peak_frequency(refine=True):.2f} Hz")
    print(f"spread {spread.f_neg:.4f} Hz to {spread.f_pos:.4f} Hz at {args.threshold_db:g} dB")
    return 0


def cmd_fit_pathloss(args) -> int:
    d_ft, pg = csvio.read_pathgain(_input(args.pathgain))
    fit = fit_path_loss(feet_to_m(d_ft), pg, d0=args.d0)
    if args.out:
        csvio.atomic_write(args.out, fit.report())
    print(fit.report(), end="")
    return 0


def cmd_run_pipeline(args) -> int:
    cfg = _config(args)
    if args.distances is not None:
        cfg = replace(cfg, distances_ft=args.distances)
    if args.sweeps is not None:
        cfg = replace(cfg, sweeps=args.sweeps)
    if args.threshold_db is not None:
        cfg = replace(cfg, analysis=replace(cfg.analysis, threshold_dB=args.threshold_db))
    print(pipeline.plan(cfg))
    if args.dry_run:
        return 0
    result = pipeline.run_campaign(cfg, args.out_dir, parallel=args.parallel)
    print()
    print("distance_ft  f_neg_hz  f_pos_hz  pg_db")
    for d in result.distances:
        if d.ok:
            print(f"{d.distance_ft:11g}  {d.spread.f_neg:8.3f}  {d.spread.f_pos:8.3f}  {d.pg_dB:.3f}")
        else:
            print(f"{d.distance_ft:11g}  FAILED  {d.error}")
    if result.spread_table().size:
        neg, pos = result.average_spread()
        print(f"average spread {neg:.3f} Hz / +{pos:.3f} Hz")
    if result.fit is not None:
        print(result.fit.report(), end="")
    else:
        print(f"path-loss fit failed: {result.fit_error}")
    print(f"result hash {result.result_hash()}")
    if args.out_dir:
        print(f"wrote {len(result.files)} files under {args.out_dir}")
    return 0 if result.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavemu", description="Robotic-arm UAV mmWave channel emulation")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-wind", help="Dryden turbulence plus mean wind -> turbulence CSV")
    _common(p)
    _indices(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate_wind)

    p = sub.add_parser("simulate-uav", help="closed-loop hover under a wind CSV -> trajectory CSV")
    _common(p)
    p.add_argument("--wind", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate_uav)

    p = sub.add_parser("emulate-arm", help="replay a trajectory on the 7-DOF arm -> motion-log CSV")
    _common(p)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_emulate_arm)

    p = sub.add_parser("sound-channel", help="motion log -> CW S21 sweep CSV")
    _common(p)
    _indices(p)
    p.add_argument("--motion", required=True)
    p.add_argument("--distance-ft", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sound_channel)

    p = sub.add_parser("calibrate", help="embed the moving cable, SOL-characterize it and de-embed")
    _common(p)
    _indices(p)
    p.add_argument("--s21", required=True)
    p.add_argument("--motion", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--terms", help="also write the per-sample error terms here")
    p.add_argument("--measured", help="also write the cable-embedded sweep here")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("analyze-doppler", help="Doppler spectrum, peak and spread of an S21 CSV")
    p.add_argument("s21")
    p.add_argument("--threshold-db", type=float, default=-60.0)
    p.add_argument("--relative", action="store_true", help="threshold relative to the spectral peak")
    p.add_argument("--out", help="write the spectrum CSV here")
    p.set_defaults(func=cmd_analyze_doppler)

    p = sub.add_parser("fit-pathloss", help="fit n and PG(d0) to a path-gain CSV")
    p.add_argument("pathgain")
    p.add_argument("--d0", type=float, default=1.0, help="reference distance in metres")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit_pathloss)

    p = sub.add_parser("run-pipeline", help="full campaign")
    _common(p)
    p.add_argument("--out-dir")
    p.add_argument("--distances", type=_distances, help="comma-separated distances in feet")
    p.add_argument("--sweeps", type=int)
    p.add_argument("--threshold-db", type=float)
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.set_defaults(func=cmd_run_pipeline)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EmulationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
