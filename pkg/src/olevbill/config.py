"""Scenario configuration: JSON in, validated dataclasses out.

Unknown keys are rejected and every error names the offending field path,
e.g. ``road.num_plates: must be >= 1``.
"""

from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .crypto import default_threshold

PLATE_MODES = ("none", "overbill", "replay_member")
OBU_MODES = ("none", "suppress_log", "replay_member", "reuse_pseudonym")


class ConfigError(ValueError):
    pass


@dataclass
class RoadConfig:
    num_plates: int = 10
    plate_length_m: float = 5.0
    auth_zone_fraction: float = 0.1
    section_plates: int | None = None  # plates per road section; None = whole road
    charge_time_ms: float = 20.0


@dataclass
class FleetConfig:
    count: int = 1
    speeds_mps: list[float] = field(default_factory=lambda: [30.0])
    battery_thresholds: list[float] = field(default_factory=lambda: [100.0])
    initial_battery: float = 20.0
    battery_capacity: float = 100.0
    pool_size: int = 16
    headway_s: float = 1.0
    rotation: str = "phase"  # "phase" or "plate"


@dataclass
class CostConfig:
    unit_cost: int = 1
    energy_per_plate: float = 1.0


@dataclass
class LatencyConfig:
    dsrc_ms: float = 1.0
    wired_ms: float = 1.0
    freshness_window_ms: float | None = None  # None = 2x plate traversal time


@dataclass
class CryptoConfig:
    j: int = 5
    t: int | None = None
    msk_epochs: int = 4
    epoch_s: float = 3600.0
    chain_length: int = 64


@dataclass
class MisbehaviorConfig:
    plates: dict[int, str] = field(default_factory=dict)
    obus: dict[int, str] = field(default_factory=dict)


@dataclass
class ScenarioConfig:
    seed: int = 0
    protocol: str = "DMA"
    road: RoadConfig = field(default_factory=RoadConfig)
    fleet: FleetConfig = field(default_factory=FleetConfig)
    costs: CostConfig = field(default_factory=CostConfig)
    latencies: LatencyConfig = field(default_factory=LatencyConfig)
    crypto: CryptoConfig = field(default_factory=CryptoConfig)
    misbehavior: MisbehaviorConfig = field(default_factory=MisbehaviorConfig)

    @property
    def section_plates(self) -> int:
        if self.fleet.rotation == "plate":
            return 1
        return self.road.section_plates or self.road.num_plates

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        mis = out["misbehavior"]
        # "none" is the cooperative default, so it normalizes away
        mis["plates"] = {str(k): v for k, v in sorted(mis["plates"].items()) if v != "none"}
        mis["obus"] = {str(k): v for k, v in sorted(mis["obus"].items()) if v != "none"}
        return out


def _coerce(value, tp, path: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if origin is typing.Union or (origin is not None and type(None) in args):
        if value is None:
            return None
        (inner,) = [a for a in args if a is not type(None)]
        return _coerce(value, inner, path)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list")
        return [_coerce(v, args[0], f"{path}[{i}]") for i, v in enumerate(value)]
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object")
        out = {}
        for k, v in value.items():
            try:
                key = int(k)
            except (TypeError, ValueError):
                raise ConfigError(f"{path}.{k}: keys must be integer ids") from None
            out[key] = _coerce(v, args[1], f"{path}.{k}")
        return out
    raise TypeError(f"unsupported config type {tp}")


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"{path + '.' if path else ''}{key}: unknown key")
    kwargs = {k: _coerce(v, hints[k], f"{path + '.' if path else ''}{k}") for k, v in data.items()}
    return cls(**kwargs)


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    _require(0 <= cfg.seed < 1 << 64, "seed", "must be an unsigned 64-bit integer")
    _require(cfg.protocol in ("DMA", "PHA"), "protocol", "must be DMA or PHA")
    r, f, c, lat, cr = cfg.road, cfg.fleet, cfg.costs, cfg.latencies, cfg.crypto
    _require(r.num_plates >= 1, "road.num_plates", "must be >= 1")
    _require(r.plate_length_m > 0, "road.plate_length_m", "must be > 0")
    _require(0 < r.auth_zone_fraction < 1, "road.auth_zone_fraction", "must be in (0, 1)")
    _require(r.section_plates is None or r.section_plates >= 1, "road.section_plates", "must be >= 1")
    _require(r.charge_time_ms >= 0, "road.charge_time_ms", "must be >= 0")
    _require(f.count >= 1, "fleet.count", "must be >= 1")
    _require(len(f.speeds_mps) >= 1, "fleet.speeds_mps", "needs at least one speed")
    _require(all(s > 0 for s in f.speeds_mps), "fleet.speeds_mps", "speeds must be > 0")
    _require(len(f.battery_thresholds) >= 1, "fleet.battery_thresholds", "needs at least one threshold")
    _require(f.pool_size >= 1, "fleet.pool_size", "must be >= 1")
    _require(f.headway_s >= 0, "fleet.headway_s", "must be >= 0")
    _require(f.battery_capacity > 0, "fleet.battery_capacity", "must be > 0")
    _require(f.rotation in ("phase", "plate"), "fleet.rotation", "must be 'phase' or 'plate'")
    _require(c.unit_cost >= 1, "costs.unit_cost", "must be >= 1")
    _require(c.energy_per_plate > 0, "costs.energy_per_plate", "must be > 0")
    _require(lat.dsrc_ms >= 0, "latencies.dsrc_ms", "must be >= 0")
    _require(lat.wired_ms >= 0, "latencies.wired_ms", "must be >= 0")
    _require(
        lat.freshness_window_ms is None or lat.freshness_window_ms > 0,
        "latencies.freshness_window_ms", "must be > 0",
    )
    _require(cr.j >= 1, "crypto.j", "must be >= 1")
    if cr.t is None:
        cr.t = default_threshold(cr.j)
    _require(1 <= cr.t <= cr.j, "crypto.t", "must satisfy 1 <= t <= j")
    _require(cr.msk_epochs >= 1, "crypto.msk_epochs", "must be >= 1")
    _require(cr.epoch_s > 0, "crypto.epoch_s", "must be > 0")
    _require(cr.chain_length >= 2, "crypto.chain_length", "must be >= 2")
    for idx, mode in cfg.misbehavior.plates.items():
        path = f"misbehavior.plates.{idx}"
        _require(0 <= idx < r.num_plates, path, "no such plate")
        _require(mode in PLATE_MODES, path, f"mode must be one of {PLATE_MODES}")
        _require(mode != "replay_member" or cfg.protocol == "PHA", path, "replay_member needs PHA")
    for idx, mode in cfg.misbehavior.obus.items():
        path = f"misbehavior.obus.{idx}"
        _require(0 <= idx < f.count, path, "no such vehicle")
        _require(mode in OBU_MODES, path, f"mode must be one of {OBU_MODES}")
        _require(mode != "replay_member" or cfg.protocol == "PHA", path, "replay_member needs PHA")
        _require(mode != "reuse_pseudonym" or cfg.protocol == "DMA", path, "reuse_pseudonym needs DMA")
    return cfg


def parse_config(data: dict) -> ScenarioConfig:
    return validate(_build(ScenarioConfig, data, ""))


def normalize(data: dict) -> dict:
    """Fully defaulted, canonical form of a raw config mapping."""
    return parse_config(data).to_dict()


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data)
