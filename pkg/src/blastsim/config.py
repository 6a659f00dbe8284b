"""Scenario configuration: JSON file + command-line overrides."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .blastload import BlastScenario, WaveformKind
from .errors import ConfigError, DomainError
from .rockdyn import GRAVITY, RigidBlock

SCHEMA = "blastsim/1"


def _positive(section: str, name: str, value, allow_none=False):
    if value is None and allow_none:
        return None
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{name} must be a number, got {value!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise ConfigError(f"{section}.{name} must be positive, got {value!r}")
    return v


def _unknown(section: str, data: dict, known: set):
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(extra)}")


@dataclass(frozen=True)
class BlockSpec:
    height: float = 10.0
    slenderness_deg: float = 15.0
    depth: float = 1.0
    density: float = 2000.0
    friction_angle_deg: float = 35.0
    gravity: float = GRAVITY
    restitution: float | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "BlockSpec":
        _unknown("block", d, {"height", "width", "slenderness_deg", "depth", "density",
                              "friction_angle_deg", "gravity", "restitution"})
        height = _positive("block", "height", d.get("height", cls.height))
        if "width" in d and "slenderness_deg" in d:
            raise ConfigError("block: give either width or slenderness_deg, not both")
        if "width" in d:
            width = _positive("block", "width", d["width"])
            slender = math.degrees(math.atan2(width, height))
        else:
            slender = _positive("block", "slenderness_deg", d.get("slenderness_deg", cls.slenderness_deg))
        if not slender < 90:
            raise ConfigError("block.slenderness_deg must be below 90")
        phi = _positive("block", "friction_angle_deg", d.get("friction_angle_deg", cls.friction_angle_deg))
        if not phi < 90:
            raise ConfigError("block.friction_angle_deg must be below 90")
        e = d.get("restitution")
        if e is not None:
            e = _positive("block", "restitution", e)
            if e > 1:
                raise ConfigError("block.restitution must lie in (0, 1]")
        return cls(height, slender, _positive("block", "depth", d.get("depth", cls.depth)),
                   _positive("block", "density", d.get("density", cls.density)), phi,
                   _positive("block", "gravity", d.get("gravity", cls.gravity)), e)

    def build(self) -> RigidBlock:
        return RigidBlock.from_slenderness(
            self.height, math.radians(self.slenderness_deg), depth=self.depth,
            density=self.density, friction_angle=math.radians(self.friction_angle_deg),
            gravity=self.gravity,
        )


@dataclass(frozen=True)
class BlastSpec:
    charge_mass: float | None = None
    standoff: float | None = None
    waveform: WaveformKind = WaveformKind.FRIEDLANDER
    scenarios: tuple[tuple[float, float], ...] = ()
    z_grid: tuple[float, float, int] | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "BlastSpec":
        _unknown("blast", d, {"charge_mass", "standoff", "waveform", "scenarios", "z_grid"})
        try:
            kind = WaveformKind(str(d.get("waveform", "friedlander")).lower())
        except ValueError:
            raise ConfigError(f"blast.waveform must be friedlander or triangular, got {d.get('waveform')!r}") from None
        w = _positive("blast", "charge_mass", d.get("charge_mass"), allow_none=True)
        r = _positive("blast", "standoff", d.get("standoff"), allow_none=True)
        scenarios = []
        for i, s in enumerate(d.get("scenarios", []) or []):
            if isinstance(s, dict):
                pair = (s.get("charge_mass"), s.get("standoff"))
            else:
                pair = tuple(s)
            if len(pair) != 2:
                raise ConfigError(f"blast.scenarios[{i}] must be (charge_mass, standoff)")
            scenarios.append((_positive(f"blast.scenarios[{i}]", "charge_mass", pair[0]),
                              _positive(f"blast.scenarios[{i}]", "standoff", pair[1])))
        grid = d.get("z_grid")
        if grid is not None:
            try:
                z_lo, z_hi, num = float(grid["start"]), float(grid["stop"]), int(grid.get("num", 50))
            except (KeyError, TypeError, ValueError):
                raise ConfigError("blast.z_grid needs start, stop and num") from None
            if not (0 < z_lo < z_hi and num >= 2):
                raise ConfigError("blast.z_grid must satisfy 0 < start < stop and num >= 2")
            grid = (z_lo, z_hi, num)
        return cls(w, r, kind, tuple(scenarios), grid)

    def scenario(self) -> BlastScenario:
        if self.charge_mass is None or self.standoff is None:
            raise ConfigError("blast.charge_mass and blast.standoff are required")
        return BlastScenario(self.charge_mass, self.standoff)


@dataclass(frozen=True)
class ScalingSpec:
    length: float
    density: float | None = None
    gravity: float = 1.0
    hopkinson: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingSpec":
        _unknown("scaling", d, {"length", "density", "gravity", "hopkinson"})
        length = _positive("scaling", "length", d.get("length"))
        hop = bool(d.get("hopkinson", False))
        density = _positive("scaling", "density", d.get("density"), allow_none=True)
        if hop and density is not None:
            raise ConfigError("scaling: give either a density factor or hopkinson, not both")
        if not hop and density is None:
            raise ConfigError("scaling: density factor required unless hopkinson is set")
        gravity = _positive("scaling", "gravity", d.get("gravity", 1.0))
        return cls(length, density, gravity, hop)


@dataclass(frozen=True)
class RunSpec:
    t_end: float | None = None
    rtol: float = 1e-9
    atol: float = 1e-12
    out: str = "out"
    jobs: int = 1
    mechanism: str = "rocking"
    samples: int = 4001
    phase_portrait: bool = False
    formats: tuple[str, ...] = ("csv", "json")

    @classmethod
    def from_dict(cls, d: dict) -> "RunSpec":
        _unknown("run", d, {"t_end", "rtol", "atol", "out", "jobs", "mechanism", "samples",
                            "phase_portrait", "format"})
        mech = d.get("mechanism", "rocking")
        if mech not in ("rocking", "sliding"):
            raise ConfigError("run.mechanism must be rocking or sliding")
        fmt = d.get("format", "both")
        if fmt not in ("csv", "json", "both"):
            raise ConfigError("run.format must be csv, json or both")
        formats = ("csv", "json") if fmt == "both" else (fmt,)
        jobs = int(d.get("jobs", 1))
        if jobs < 1:
            raise ConfigError("run.jobs must be >= 1")
        samples = int(d.get("samples", cls.samples))
        if samples < 2:
            raise ConfigError("run.samples must be >= 2")
        return cls(_positive("run", "t_end", d.get("t_end"), allow_none=True),
                   _positive("run", "rtol", d.get("rtol", cls.rtol)),
                   _positive("run", "atol", d.get("atol", cls.atol)),
                   str(d.get("out", cls.out)), jobs, mech, samples,
                   bool(d.get("phase_portrait", False)), formats)


@dataclass(frozen=True)
class CriticalSpec:
    bracket: tuple[float, float] | None = None
    rtol: float = 1e-3

    @classmethod
    def from_dict(cls, d: dict) -> "CriticalSpec":
        _unknown("critical", d, {"bracket", "rtol"})
        br = d.get("bracket")
        if br is not None:
            if len(br) != 2:
                raise ConfigError("critical.bracket must be [lo, hi]")
            br = (_positive("critical", "bracket[0]", br[0]), _positive("critical", "bracket[1]", br[1]))
            if not br[0] < br[1]:
                raise ConfigError("critical.bracket must be increasing")
        return cls(br, _positive("critical", "rtol", d.get("rtol", cls.rtol)))


@dataclass(frozen=True)
class ScenarioConfig:
    block: BlockSpec = field(default_factory=BlockSpec)
    blast: BlastSpec = field(default_factory=BlastSpec)
    scaling: ScalingSpec | None = None
    run: RunSpec = field(default_factory=RunSpec)
    critical: CriticalSpec = field(default_factory=CriticalSpec)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        _unknown("config", d, {"schema", "block", "blast", "scaling", "run", "critical"})
        schema = d.get("schema", SCHEMA)
        if schema != SCHEMA:
            raise ConfigError(f"unsupported schema {schema!r} (expected {SCHEMA!r})")
        try:
            scaling = d.get("scaling")
            return cls(
                BlockSpec.from_dict(d.get("block", {}) or {}),
                BlastSpec.from_dict(d.get("blast", {}) or {}),
                ScalingSpec.from_dict(scaling) if scaling else None,
                RunSpec.from_dict(d.get("run", {}) or {}),
                CriticalSpec.from_dict(d.get("critical", {}) or {}),
            )
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> dict:
    """Raw configuration mapping from a JSON file."""
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
