"""Scenario configuration dataclasses with JSON loading and ``key=value`` overrides."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path as FsPath
from typing import Any, Mapping

from .capabilities import CapabilityModel


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ApplicationSpec:
    name: str
    min_fidelity: float
    pairs: int
    window: float
    minsep: float
    n_inst: int
    expiry_rel: float
    resubmit_mean: float
    platform_window_floor: float

    def check(self, where: str) -> None:
        for f in ("window", "n_inst", "expiry_rel", "resubmit_mean", "platform_window_floor", "pairs"):
            if not getattr(self, f) > 0:
                raise ConfigError(f"{where}.{f}", "must be positive")
        if self.minsep < 0:
            raise ConfigError(f"{where}.minsep", "must be non-negative")
        if not 0.5 < self.min_fidelity <= 1:
            raise ConfigError(f"{where}.min_fidelity", "must lie in (0.5, 1]")


@dataclass(frozen=True)
class Platform:
    name: str
    memory_lifetime: float  # seconds
    share: float  # probability an end node uses this platform


@dataclass(frozen=True)
class Catalog:
    applications: tuple[ApplicationSpec, ...]
    platforms: tuple[Platform, ...]

    @classmethod
    def from_mapping(cls, data: Mapping, where: str = "catalog") -> "Catalog":
        try:
            apps = tuple(ApplicationSpec(**a) for a in data["applications"])
            plats = tuple(Platform(**p) for p in data["platforms"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(where, f"malformed catalog ({exc})") from exc
        for i, a in enumerate(apps):
            a.check(f"{where}.applications[{i}]")
        if not plats or any(p.memory_lifetime <= 0 or p.share < 0 for p in plats):
            raise ConfigError(f"{where}.platforms", "need positive lifetimes and non-negative shares")
        if not math.isclose(sum(p.share for p in plats), 1.0, abs_tol=1e-9):
            raise ConfigError(f"{where}.platforms", "shares must sum to 1")
        return cls(apps, plats)

    @classmethod
    def builtin(cls, name: str = "catalog") -> "Catalog":
        text = resources.files("qnetsched").joinpath("data", f"{name}.json").read_text()
        return cls.from_mapping(json.loads(text), name)


@dataclass(frozen=True)
class Fractions:
    interface: float = 0.8
    junction: float = 0.1
    backbone: float = 0.1

    def check(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0 <= v <= 1:
                raise ConfigError(f"fractions.{f.name}", "must lie in [0, 1]")


@dataclass(frozen=True)
class TopologyParams:
    backbones: int
    local_areas: int
    end_nodes: int


@dataclass(frozen=True)
class ScenarioConfig:
    topology: str = "dumbbell"  # "dumbbell", "random" or a JSON file path
    topology_params: TopologyParams | None = None
    capabilities: CapabilityModel = field(default_factory=CapabilityModel)
    catalog: Catalog = field(default_factory=Catalog.builtin)
    fractions: Fractions = field(default_factory=Fractions)
    epsilon_service: float = 1e-5
    T_SI_seconds: float = 1800.0
    horizon_intervals: int = 200
    ramp_up_seconds: float | None = None  # initial submissions spread over this window
    bonus_enabled: bool = True
    bonus_budget_fraction: float = 0.8
    attempt_period: float = 0.01
    seeds: tuple[int, ...] = (0,)
    check_invariants: bool = False

    def check(self) -> None:
        if self.topology not in ("dumbbell", "random") and not FsPath(self.topology).exists():
            raise ConfigError("topology", f"unknown topology {self.topology!r}")
        if self.topology == "random" and self.topology_params is None:
            raise ConfigError("topology_params", "required for random topologies")
        if not 0 < self.epsilon_service < 1:
            raise ConfigError("epsilon_service", "must lie in (0, 1)")
        if not self.T_SI_seconds > 0:
            raise ConfigError("T_SI_seconds", "must be positive")
        if self.horizon_intervals < 1:
            raise ConfigError("horizon_intervals", "must be at least 1")
        if not self.attempt_period > 0:
            raise ConfigError("attempt_period", "must be positive")
        if not 0 < self.bonus_budget_fraction <= 1:
            raise ConfigError("bonus_budget_fraction", "must lie in (0, 1]")
        if self.ramp_up_seconds is not None and self.ramp_up_seconds <= 0:
            raise ConfigError("ramp_up_seconds", "must be positive")
        if not self.seeds:
            raise ConfigError("seeds", "need at least one seed")
        self.fractions.check()

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "catalog":
                out[f.name] = {
                    "applications": [vars(a) for a in v.applications],
                    "platforms": [vars(p) for p in v.platforms],
                }
            elif f.name in ("capabilities", "fractions") or (f.name == "topology_params" and v):
                out[f.name] = dict(vars(v))
            elif f.name == "seeds":
                out[f.name] = list(v)
            else:
                out[f.name] = v
        return out


_SCALARS = {
    "topology": str,
    "epsilon_service": float,
    "T_SI_seconds": float,
    "horizon_intervals": int,
    "bonus_enabled": bool,
    "bonus_budget_fraction": float,
    "attempt_period": float,
    "check_invariants": bool,
}


def config_from_mapping(data: Mapping, base_dir: FsPath | None = None) -> ScenarioConfig:
    data = dict(data)
    kwargs: dict[str, Any] = {}
    unknown = set(data) - {f.name for f in fields(ScenarioConfig)}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    for name, kind in _SCALARS.items():
        if name in data:
            value = data[name]
            if kind is bool and not isinstance(value, bool):
                raise ConfigError(name, "must be a boolean")
            try:
                kwargs[name] = kind(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(name, str(exc)) from exc
    topo = kwargs.get("topology")
    if topo and topo not in ("dumbbell", "random") and base_dir is not None:
        candidate = base_dir / topo
        if candidate.exists():
            kwargs["topology"] = str(candidate)
    if data.get("ramp_up_seconds") is not None:
        kwargs["ramp_up_seconds"] = float(data["ramp_up_seconds"])
    if data.get("topology_params") is not None:
        try:
            kwargs["topology_params"] = TopologyParams(**data["topology_params"])
        except TypeError as exc:
            raise ConfigError("topology_params", str(exc)) from exc
    if "capabilities" in data:
        try:
            kwargs["capabilities"] = CapabilityModel.from_mapping(data["capabilities"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("capabilities", str(exc)) from exc
    if "fractions" in data:
        try:
            kwargs["fractions"] = Fractions(**data["fractions"])
        except TypeError as exc:
            raise ConfigError("fractions", str(exc)) from exc
    if "catalog" in data:
        cat = data["catalog"]
        kwargs["catalog"] = Catalog.builtin(cat) if isinstance(cat, str) else Catalog.from_mapping(cat)
    if "seeds" in data:
        seeds = data["seeds"]
        if isinstance(seeds, int):
            seeds = list(range(seeds))
        kwargs["seeds"] = tuple(int(s) for s in seeds)
    cfg = ScenarioConfig(**kwargs)
    cfg.check()
    return cfg


def load_config(path: str | FsPath) -> ScenarioConfig:
    p = FsPath(path)
    if not p.exists():
        raise ConfigError("config", f"file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{p}: {exc}") from exc
    return config_from_mapping(data, p.parent)


def apply_overrides(cfg: ScenarioConfig, overrides: Mapping[str, str]) -> ScenarioConfig:
    """Apply ``key=value`` overrides; values are parsed as JSON when possible."""
    data = cfg.to_dict()
    for key, raw in overrides.items():
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(key, "no such section")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(key, "unknown field")
        node[parts[-1]] = value
    return config_from_mapping(data)


def with_changes(cfg: ScenarioConfig, **changes: Any) -> ScenarioConfig:
    out = replace(cfg, **changes)
    out.check()
    return out
