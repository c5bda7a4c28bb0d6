"""CSV interfaces between stages.

Floats are written with 17 significant digits so a file round trip is
bit-exact, which is what lets file-composed stages match the in-process
pipeline. Readers check the header and the column count of every row and
report the offending line number.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .arm import ArmRun
from .calibration import ErrorTerms
from .channel import S21Series, SounderConfig
from .errors import ParseError
from .quadcopter import Trajectory
from .wind import TurbulenceSeries

TURBULENCE_COLUMNS = ("time_s", "u", "v", "w", "Vw_n", "Vw_e", "Vw_d")
TRAJECTORY_COLUMNS = (
    "time_s", "p_n", "p_e", "p_d", "phi", "theta", "psi",
    "v_n", "v_e", "v_d", "phi_dot", "theta_dot", "psi_dot",
)  # fmt: skip
MOTION_COLUMNS = ("time_s", "x", "y", "z", "vx", "vy", "vz") + tuple(f"q{i}" for i in range(1, 8))
S21_COLUMNS = ("index", "time_s", "re", "im")
S21_HEADER_KEYS = ("f_c", "Ts", "n_points", "distance_ft")
TERMS_COLUMNS = ("time_s", "e00_re", "e00_im", "e11_re", "e11_im", "e10e01_re", "e10e01_im")
SPECTRUM_COLUMNS = ("freq_hz", "power_db")
SPREAD_COLUMNS = ("distance_ft", "f_neg_hz", "f_pos_hz")
PATHGAIN_COLUMNS = ("distance_ft", "pg_db")
OVERLAY_COLUMNS = ("freq_hz", "measured_db", "theoretical_db")


def _fmt(x) -> str:
    return repr(float(x))


def atomic_write(path: str | Path, text: str) -> Path:
    """Write ``text`` to a temp file in the target directory, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_table(columns, rows, comments=()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_table(path, columns, data: np.ndarray, comments=()) -> Path:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.size and data.shape[1] != len(columns):
        raise ParseError(f"{len(columns)} columns declared but data has {data.shape[1]}")
    return atomic_write(path, format_table(columns, data.tolist(), comments))


def read_table(path, columns) -> tuple[np.ndarray, dict[str, str]]:
    """Read a numeric CSV with an exact header; ``# key = value`` comment lines become metadata."""
    path = Path(path)
    meta: dict[str, str] = {}
    rows = []
    header_seen = False
    with path.open(newline="") as fh:
        for no, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            cells = next(csv.reader([s]))
            if not header_seen:
                if tuple(c.strip() for c in cells) != tuple(columns):
                    raise ParseError(f"{path}:{no}: expected header {','.join(columns)}, got {s}")
                header_seen = True
                continue
            if len(cells) != len(columns):
                raise ParseError(f"{path}:{no}: expected {len(columns)} fields, got {len(cells)}")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise ParseError(f"{path}:{no}: non-numeric field in {s!r}") from None
    if not header_seen:
        raise ParseError(f"{path}: missing header {','.join(columns)}")
    data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    return data, meta


# ------------------------------------------------------------------ per type


def write_turbulence(path, turb: TurbulenceSeries) -> Path:
    Vw = turb.V_w if turb.V_w is not None else np.full((len(turb), 3), np.nan)
    return write_table(path, TURBULENCE_COLUMNS, np.column_stack([turb.t, turb.u, turb.v, turb.w, Vw]))


def read_turbulence(path) -> TurbulenceSeries:
    d, _ = read_table(path, TURBULENCE_COLUMNS)
    Vw = None if np.all(np.isnan(d[:, 4:7])) else d[:, 4:7].copy()
    return TurbulenceSeries(d[:, 0].copy(), d[:, 1].copy(), d[:, 2].copy(), d[:, 3].copy(), Vw)


def write_trajectory(path, traj: Trajectory) -> Path:
    return write_table(
        path, TRAJECTORY_COLUMNS, np.column_stack([traj.t, traj.position, traj.euler, traj.velocity, traj.euler_rate])
    )


def read_trajectory(path) -> Trajectory:
    d, _ = read_table(path, TRAJECTORY_COLUMNS)
    return Trajectory(d[:, 0].copy(), d[:, 1:4].copy(), d[:, 4:7].copy(), d[:, 7:10].copy(), d[:, 10:13].copy())


def write_motion(path, run: ArmRun) -> Path:
    return write_table(path, MOTION_COLUMNS, np.column_stack([run.t, run.position, run.velocity, run.q]))


def read_motion(path) -> dict[str, np.ndarray]:
    d, _ = read_table(path, MOTION_COLUMNS)
    return {"t": d[:, 0].copy(), "position": d[:, 1:4].copy(), "velocity": d[:, 4:7].copy(), "q": d[:, 7:].copy()}


def write_s21(path, s21: S21Series) -> Path:
    cfg = s21.config
    comments = [
        f"f_c = {_fmt(cfg.f_c)}",
        f"Ts = {_fmt(cfg.Ts)}",
        f"n_points = {cfg.n_points}",
        f"distance_ft = {_fmt(s21.distance_ft)}",
        f"if_bandwidth = {_fmt(cfg.if_bandwidth)}",
        f"noise_floor_dB = {_fmt(cfg.noise_floor_dB)}",
    ]
    x = s21.samples
    data = np.column_stack([np.arange(len(x)), s21.t, x.real, x.imag])
    return write_table(path, S21_COLUMNS, data, comments)


def read_s21(path) -> S21Series:
    d, meta = read_table(path, S21_COLUMNS)
    missing = [k for k in S21_HEADER_KEYS if k not in meta]
    if missing:
        raise ParseError(f"{path}: missing header lines {missing}")
    try:
        cfg = SounderConfig(
            f_c=float(meta["f_c"]),
            n_points=int(meta["n_points"]),
            Ts=float(meta["Ts"]),
            if_bandwidth=float(meta.get("if_bandwidth", 300.0)),
            noise_floor_dB=float(meta.get("noise_floor_dB", -60.0)),
        )
    except ValueError as exc:
        raise ParseError(f"{path}: bad header value ({exc})") from None
    if len(d) != cfg.n_points:
        raise ParseError(f"{path}: header says {cfg.n_points} points, file has {len(d)}")
    if not np.array_equal(d[:, 0], np.arange(len(d))):
        bad = int(np.flatnonzero(d[:, 0] != np.arange(len(d)))[0])
        raise ParseError(f"{path}: sample index out of sequence at data row {bad + 1}")
    return S21Series(cfg, d[:, 2] + 1j * d[:, 3], float(meta["distance_ft"]))


def write_error_terms(path, t: np.ndarray, terms: ErrorTerms) -> Path:
    cols = [t]
    for arr in (terms.e00, terms.e11, terms.e10e01):
        cols += [arr.real, arr.imag]
    return write_table(path, TERMS_COLUMNS, np.column_stack(cols))


def read_error_terms(path) -> tuple[np.ndarray, ErrorTerms]:
    d, _ = read_table(path, TERMS_COLUMNS)
    return d[:, 0].copy(), ErrorTerms(d[:, 1] + 1j * d[:, 2], d[:, 3] + 1j * d[:, 4], d[:, 5] + 1j * d[:, 6])


def write_spectrum(path, spec) -> Path:
    return write_table(path, SPECTRUM_COLUMNS, np.column_stack([spec.freqs, spec.power_dB]))


def read_spectrum(path):
    from .analysis import DopplerSpectrum

    d, _ = read_table(path, SPECTRUM_COLUMNS)
    return DopplerSpectrum(d[:, 0].copy(), d[:, 1].copy())


def write_spread_table(path, rows) -> Path:
    return write_table(path, SPREAD_COLUMNS, np.asarray(rows, dtype=float).reshape(-1, 3))


def read_spread_table(path) -> np.ndarray:
    return read_table(path, SPREAD_COLUMNS)[0]


def write_pathgain(path, distances_ft, pg_db) -> Path:
    return write_table(path, PATHGAIN_COLUMNS, np.column_stack([distances_ft, pg_db]))


def read_pathgain(path) -> tuple[np.ndarray, np.ndarray]:
    d, _ = read_table(path, PATHGAIN_COLUMNS)
    return d[:, 0].copy(), d[:, 1].copy()
