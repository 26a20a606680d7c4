"""Simulation configuration and the flat ``key = value`` config file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path

from .mover import ALGORITHMS
from .scheduler import PLACEMENTS
from .workload import WorkloadSpec

YEAR = 365 * 24 * 3600


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    num_servers: int = 128
    cores_per_server: int = 8
    horizon: int = YEAR
    mover_enabled: bool = False
    mover_interval: int = 3600
    mover_algorithm: str = "drain-greedy"
    # placement of the unpatched batch system; with the mover on it is always best-fit
    baseline_placement: str = "best-fit"
    migration_downtime: int = 60
    per_job_migration_cooldown: int | None = None
    power_management: bool = False
    server_watts: float | None = None
    power_on_delay: int = 0
    rng_seed: int = 0
    sample_interval: int = 3600
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)

    @property
    def placement(self) -> str:
        return "best-fit" if self.mover_enabled else self.baseline_placement

    @property
    def cooldown(self) -> int:
        if self.per_job_migration_cooldown is None:
            return self.mover_interval
        return self.per_job_migration_cooldown

    def validate(self) -> None:
        if self.num_servers < 1:
            raise ConfigError("num_servers must be >= 1")
        if self.cores_per_server < 1:
            raise ConfigError("cores_per_server must be >= 1")
        if self.horizon <= 0:
            raise ConfigError("horizon must be > 0")
        if self.mover_interval <= 0:
            raise ConfigError("mover_interval must be > 0")
        if self.sample_interval <= 0:
            raise ConfigError("sample_interval must be > 0")
        if self.mover_algorithm not in ALGORITHMS:
            raise ConfigError(f"mover_algorithm must be one of {', '.join(ALGORITHMS)}")
        if self.baseline_placement not in PLACEMENTS:
            raise ConfigError(f"baseline_placement must be one of {', '.join(PLACEMENTS)}")
        if self.migration_downtime < 0 or self.cooldown < 0 or self.power_on_delay < 0:
            raise ConfigError("downtime, cooldown and power-on delay must be non-negative")
        try:
            self.workload.validate(self.cores_per_server)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes) -> SimConfig:
        """Copy with changes; workload fields may be given by name too."""
        wl_names = {f.name for f in dataclasses.fields(WorkloadSpec)}
        wl = {k: changes.pop(k) for k in list(changes) if k in wl_names}
        if wl:
            changes["workload"] = dataclasses.replace(changes.get("workload", self.workload), **wl)
        return dataclasses.replace(self, **changes)

    def echo(self) -> dict:
        """Flat field dump, used to check that paired runs match."""
        out = {k: v for k, v in dataclasses.asdict(self).items() if k != "workload"}
        out.update({f"workload.{k}": v for k, v in dataclasses.asdict(self.workload).items()})
        return out


def _fields(cls) -> dict[str, type]:
    return {f.name: f.type for f in dataclasses.fields(cls) if f.name != "workload"}


def _coerce(key: str, raw: str, typ: str):
    raw = raw.strip()
    optional = "None" in typ
    if optional and raw.lower() in ("", "none"):
        return None
    try:
        if typ.startswith("bool"):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ.startswith("int"):
            return int(raw)
        if typ.startswith("float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ}") from None
    return raw


def config_from_mapping(values: dict[str, str], base: SimConfig | None = None) -> SimConfig:
    """Build a config from string values keyed by SimConfig/WorkloadSpec field name.

    ``workload`` names the workload kind and ``power_model`` (on/off) is an
    alias for ``power_management``.
    """
    base = base or SimConfig()
    sim_fields = _fields(SimConfig)
    wl_fields = _fields(WorkloadSpec)
    changes: dict[str, object] = {}
    for key, raw in values.items():
        if key == "workload":
            changes["kind"] = raw.strip()
        elif key == "power_model":
            changes["power_management"] = _coerce(key, raw, "bool")
        elif key in sim_fields:
            changes[key] = _coerce(key, raw, sim_fields[key])
        elif key in wl_fields:
            changes[key] = _coerce(key, raw, wl_fields[key])
        else:
            raise ConfigError(f"unknown config key {key!r}")
    cfg = base.replace(**changes)
    cfg.validate()
    return cfg


def parse_config(text: str, name: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{name}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{name}:{lineno}: empty key")
        values[key] = value
    return values


def load_config(path: str | PathLike, overrides: dict[str, str] | None = None) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    values = parse_config(text, str(path))
    values.update(overrides or {})
    return config_from_mapping(values)
