"""Declarative service configuration.

One YAML file describes the server, the user roster, and every lighting
zone (mechanism parameters, reward thresholds, geofence, work-hours
window).  Environment variables override ports and paths only:
``LUMENVOTE_HOST``, ``LUMENVOTE_PORT``, ``LUMENVOTE_DATA_DIR``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import yaml

from .geofence import GeoFence
from .mechanism import DEFAULT_SETTINGS, MechanismConfig, OutcomeSetting
from .rewards import RewardConfig

MILLI_PER_POINT = 1000


class ConfigError(ValueError):
    """Malformed configuration file."""


@dataclass(frozen=True)
class WorkHours:
    """Daily window during which the mechanism controls the lights,
    minutes since local midnight."""

    start_minute: int = 9 * 60
    end_minute: int = 17 * 60

    def __post_init__(self):
        if not 0 <= self.start_minute < self.end_minute <= 24 * 60:
            raise ConfigError("work hours must satisfy 0 <= start < end <= 24:00")


@dataclass(frozen=True)
class ZoneConfig:
    zone_id: str
    mechanism: MechanismConfig = field(default_factory=MechanismConfig)
    rewards: RewardConfig = field(default_factory=RewardConfig)
    fence: GeoFence = field(
        default_factory=lambda: GeoFence.box(-90.0, -180.0, 90.0, 180.0)
    )
    work_hours: WorkHours = field(default_factory=WorkHours)
    actuator_endpoint: str = "mock"


@dataclass(frozen=True)
class AppConfig:
    host: str = "127.0.0.1"
    port: int = 8030
    data_dir: str = "./data"
    static_dir: str | None = None
    roster: dict[str, str] = field(default_factory=dict)
    zones: tuple[ZoneConfig, ...] = ()


def _parse_hhmm(text: str) -> int:
    try:
        hh, mm = text.strip().split(":")
        minute = int(hh) * 60 + int(mm)
    except (ValueError, AttributeError) as exc:
        raise ConfigError(f"bad time of day {text!r}, expected HH:MM") from exc
    return minute


def _parse_fence(obj: dict) -> GeoFence:
    if "box" in obj:
        box = obj["box"]
        if len(box) != 4:
            raise ConfigError("fence box needs [lat_min, lon_min, lat_max, lon_max]")
        return GeoFence.box(*map(float, box))
    if "polygon" in obj:
        return GeoFence(tuple((float(a), float(b)) for a, b in obj["polygon"]))
    raise ConfigError("fence needs either 'box' or 'polygon'")


def _parse_mechanism(obj: dict) -> MechanismConfig:
    settings = DEFAULT_SETTINGS
    if "settings" in obj:
        settings = tuple(
            OutcomeSetting(i, s["label"], int(s["level_percent"]))
            for i, s in enumerate(obj["settings"])
        )
    virtual = obj.get("virtual_cost")
    return MechanismConfig(
        lambda_max=int(obj.get("lambda_max", 100)),
        settings=settings,
        nominal_outcome=int(obj.get("nominal_outcome", len(settings) - 1)),
        virtual_cost=tuple(int(c) for c in virtual) if virtual is not None else None,
    )


def _parse_rewards(obj: dict) -> RewardConfig:
    return RewardConfig(
        lottery_threshold_milli=int(obj.get("lottery_threshold_points", 10_000))
        * MILLI_PER_POINT,
        communal_threshold_milli=int(obj.get("communal_threshold_points", 50_000))
        * MILLI_PER_POINT,
        prizes_per_lottery=int(obj.get("prizes_per_lottery", 1)),
        survey_bonus_milli=int(obj.get("survey_bonus_points", 500)) * MILLI_PER_POINT,
        rng_seed=int(obj.get("seed", 0)),
    )


def parse_zone(obj: dict) -> ZoneConfig:
    if "id" not in obj:
        raise ConfigError("zone entry missing 'id'")
    wh = WorkHours()
    if "work_hours" in obj:
        wh = WorkHours(
            start_minute=_parse_hhmm(obj["work_hours"].get("start", "09:00")),
            end_minute=_parse_hhmm(obj["work_hours"].get("end", "17:00")),
        )
    return ZoneConfig(
        zone_id=str(obj["id"]),
        mechanism=_parse_mechanism(obj.get("mechanism", {})),
        rewards=_parse_rewards(obj.get("rewards", {})),
        fence=_parse_fence(obj["fence"])
        if "fence" in obj
        else GeoFence.box(-90.0, -180.0, 90.0, 180.0),
        work_hours=wh,
        actuator_endpoint=str(obj.get("actuator", "mock")),
    )


def load_config(path: str | os.PathLike) -> AppConfig:
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    server = raw.get("server", {})
    zones = tuple(parse_zone(z) for z in raw.get("zones", []))
    ids = [z.zone_id for z in zones]
    if len(set(ids)) != len(ids):
        raise ConfigError("zone ids must be unique")
    roster = {str(u): str(t) for u, t in (raw.get("roster") or {}).items()}
    cfg = AppConfig(
        host=str(server.get("host", "127.0.0.1")),
        port=int(server.get("port", 8030)),
        data_dir=str(server.get("data_dir", "./data")),
        static_dir=server.get("static_dir"),
        roster=roster,
        zones=zones,
    )
    return apply_env_overrides(cfg)


def apply_env_overrides(cfg: AppConfig, env: dict[str, str] | None = None) -> AppConfig:
    env = os.environ if env is None else env
    host = env.get("LUMENVOTE_HOST", cfg.host)
    port = int(env.get("LUMENVOTE_PORT", cfg.port))
    data_dir = env.get("LUMENVOTE_DATA_DIR", cfg.data_dir)
    static_dir = env.get("LUMENVOTE_STATIC_DIR", cfg.static_dir)
    return AppConfig(
        host=host,
        port=port,
        data_dir=data_dir,
        static_dir=static_dir,
        roster=cfg.roster,
        zones=cfg.zones,
    )
