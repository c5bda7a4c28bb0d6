"""Campaign configuration: dataclasses, INI loading with unit suffixes, hashing and seeds.

A config file is plain INI. Every value may carry a unit suffix, for
example ``L_u = 200 ft`` or ``Ts = 4.4 ms``; values are converted to SI on
load. Distances are the exception: they are bookkept in feet, so bare
numbers in ``[campaign] distances`` are read as feet.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .arm import TrackingGains
from .channel import ChannelParams, SounderConfig
from .errors import ParameterError, ParseError
from .quadcopter import HoverGains, QuadParams
from .units import FT, parse_quantity
from .wind import DrydenParams, MeanWind

DEFAULT_DISTANCES_FT = tuple(3.5 + 2.0 * k for k in range(11))

# Stage identifiers feed the seed derivation; never renumber them.
STAGES = {"wind": 0, "cable": 1, "sol": 2, "channel": 3, "shadow": 4}


@dataclass(frozen=True)
class CableSettings:
    phase_range_deg: tuple[float, float] = (-3.4, 0.0)
    mag_range_dB: tuple[float, float] = (-0.026, -0.014)
    corr_time: float = 2.0
    base_loss_dB: float = -6.0
    reflection_dB: float = -25.0
    averages: int = 16

    def __post_init__(self):
        if self.averages < 1 or self.corr_time <= 0:
            raise ParameterError("cable averages must be >= 1 and corr_time > 0")


@dataclass(frozen=True)
class AnalysisSettings:
    threshold_dB: float = -60.0
    relative: bool = False
    idle_window: int = 50
    idle_factor: float = 3.0
    pdf_bin: float = 0.02
    sweep_combine: str = "extreme"

    def __post_init__(self):
        if self.sweep_combine not in ("extreme", "mean"):
            raise ParameterError("sweep_combine must be 'extreme' or 'mean'")


@dataclass(frozen=True)
class CampaignConfig:
    dryden: DrydenParams = field(default_factory=DrydenParams)
    mean_wind: MeanWind = field(default_factory=MeanWind)
    quad: QuadParams = field(default_factory=QuadParams)
    gains: HoverGains = field(default_factory=HoverGains)
    tracking: TrackingGains = field(default_factory=TrackingGains)
    arm_scale: float = 1.0
    sounder: SounderConfig = field(default_factory=SounderConfig)
    channel: ChannelParams = field(default_factory=lambda: ChannelParams(n_exp=1.843, shadow_sigma_dB=1.0))
    cable: CableSettings = field(default_factory=CableSettings)
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    distances_ft: tuple[float, ...] = DEFAULT_DISTANCES_FT
    sweeps: int = 3
    seed: int = 0
    idle_lead: float = 3.0
    tx_height_offset: float = -2 * 0.0254

    def __post_init__(self):
        object.__setattr__(self, "distances_ft", tuple(float(d) for d in self.distances_ft))
        if not self.distances_ft:
            raise ParameterError("distance list must not be empty")
        if any(d <= 0 for d in self.distances_ft):
            raise ParameterError("distances must be positive")
        if self.sweeps < 1:
            raise ParameterError("need at least one sweep per distance")
        if not 0 <= self.idle_lead < self.sounder.duration:
            raise ParameterError("idle lead must lie inside the sweep")
        if self.arm_scale <= 0:
            raise ParameterError("arm scale must be positive")

    @property
    def motion_duration(self) -> float:
        return self.sounder.duration - self.idle_lead

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, **kw) -> "CampaignConfig":
        return replace(self, **kw)


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x).hex()
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def derive_seed(seed: int, stage: str, i: int = 0, j: int = 0) -> np.random.SeedSequence:
    """Per-stage child seed: SeedSequence(seed, spawn_key=(stage id, distance index, sweep index))."""
    if stage not in STAGES:
        raise ParameterError(f"unknown stage {stage!r}")
    return np.random.SeedSequence(int(seed), spawn_key=(STAGES[stage], int(i), int(j)))


# ---------------------------------------------------------------- INI loading

_SECTIONS = {
    "wind": "dryden",
    "mean_wind": "mean_wind",
    "quad": "quad",
    "gains": "gains",
    "tracking": "tracking",
    "sounder": "sounder",
    "channel": "channel",
    "cable": "cable",
    "analysis": "analysis",
}

_INT_FIELDS = {"seed", "n_points", "averages", "idle_window", "sweeps"}
_BOOL_FIELDS = {"relative"}
_STR_FIELDS = {"sweep_combine"}


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = ""
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif s and not s.startswith(("#", ";")) and ("=" in s or ":" in s):
            key = s.split("=", 1)[0].strip().lower() if "=" in s else s.split(":", 1)[0].strip().lower()
            lines[(section, key)] = no
    return lines


def _convert(name: str, raw: str, where: str):
    try:
        if name in _BOOL_FIELDS:
            low = raw.strip().lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ParseError(f"expected a boolean, got {raw!r}")
            return low in ("true", "yes", "1")
        if name in _STR_FIELDS:
            return raw.strip()
        parts = raw.split(",")
        if name.endswith("_deg"):
            # degree-named fields stay in degrees
            values = [parse_quantity(p.strip().removesuffix("deg")) for p in parts]
        else:
            values = [parse_quantity(p) for p in parts]
    except ParseError as exc:
        raise ParseError(f"{where}: {exc}") from None
    if name in _INT_FIELDS:
        if len(values) != 1 or values[0] != int(values[0]):
            raise ParseError(f"{where}: {name} must be an integer")
        return int(values[0])
    return values[0] if len(values) == 1 else tuple(values)


def _parse_distances(raw: str, where: str) -> tuple[float, ...]:
    out = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if part.lower().endswith("ft"):
                out.append(float(part[:-2]))
            else:
                try:
                    out.append(float(part))
                except ValueError:
                    out.append(parse_quantity(part) / FT)
        except (ValueError, ParseError) as exc:
            raise ParseError(f"{where}: bad distance {part!r} ({exc})") from None
    return tuple(out)


def parse_config(text: str, source: str = "<config>") -> CampaignConfig:
    """Build a :class:`CampaignConfig` from INI text; unknown keys are errors."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ParseError(f"{source}: {exc}") from None
    lines = _key_lines(text)
    base = CampaignConfig()
    updates: dict = {}
    for section in cp.sections():
        where = lambda key: f"{source}:{lines.get((section, key), '?')} [{section}] {key}"  # noqa: E731
        if section == "campaign":
            top = {}
            for key, raw in cp.items(section):
                if key == "distances":
                    top["distances_ft"] = _parse_distances(raw, where(key))
                elif key in ("sweeps", "seed", "arm_scale", "idle_lead", "tx_height_offset"):
                    top[key] = _convert(key, raw, where(key))
                else:
                    raise ParseError(f"{where(key)}: unknown key")
            updates.update(top)
            continue
        attr = _SECTIONS.get(section)
        if attr is None:
            raise ParseError(f"{source}:{_section_line(text, section)}: unknown section [{section}]")
        current = updates.get(attr, getattr(base, attr))
        names = {f.name.lower(): f.name for f in fields(current)}
        kw = {}
        for key, raw in cp.items(section):
            if key not in names:
                raise ParseError(f"{where(key)}: unknown key (expected one of {sorted(names)})")
            kw[names[key]] = _convert(names[key], raw, where(key))
        try:
            updates[attr] = replace(current, **kw)
        except (ParameterError, TypeError, ValueError) as exc:
            raise ParseError(f"{source}: [{section}] {exc}") from None
    try:
        return replace(base, **updates)
    except ParameterError as exc:
        raise ParseError(f"{source}: {exc}") from None


def _section_line(text: str, section: str) -> int | str:
    for no, raw in enumerate(text.splitlines(), 1):
        if raw.strip() == f"[{section}]":
            return no
    return "?"


def load_config(path: str | Path) -> CampaignConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))
