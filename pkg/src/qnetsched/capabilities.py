"""Network capabilities table: per-path generation rate and minimum fidelity.

The model is a length-scaling heuristic.  A base (rate, fidelity) pair is
drawn per path from truncated normals, then the rate is multiplied by a
factor for every extra internal hop and for every backbone, and the fidelity
loses a fixed penalty for the same.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.stats import truncnorm

from .network import ComponentId, Kind, Path, PathPartition, ResourceGraph

FIDELITY_FLOOR = 0.25
RATE_FLOOR = 1e-6


@dataclass(frozen=True)
class CapabilityEntry:
    rate: float
    fidelity: float

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError(f"fidelity outside [0, 1]: {self.fidelity}")


@dataclass(frozen=True)
class CapabilityModel:
    base_rate_mean: float = 2.0
    base_rate_std: float = 0.5
    base_fid_mean: float = 0.95
    base_fid_std: float = 0.02
    per_hop_rate_factor: float = 0.8
    per_backbone_rate_factor: float = 0.25
    per_hop_fid_penalty: float = 0.01
    per_backbone_fid_penalty: float = 0.04

    def __post_init__(self) -> None:
        for name in ("per_hop_rate_factor", "per_backbone_rate_factor"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        for name in ("per_hop_fid_penalty", "per_backbone_fid_penalty", "base_rate_std", "base_fid_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.base_rate_mean <= 0 or self.base_fid_mean <= 0:
            raise ValueError("means must be positive")

    @classmethod
    def from_mapping(cls, data: Mapping | None) -> "CapabilityModel":
        return cls(**dict(data or {}))


@dataclass(frozen=True)
class CapabilitiesTable:
    entries: Mapping[Path, CapabilityEntry]
    version: int
    backbone_count: Mapping[Path, int] = field(default_factory=dict, compare=False)

    def __getitem__(self, path: Path) -> CapabilityEntry:
        return self.entries[path]

    def __len__(self) -> int:
        return len(self.entries)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["path_id", "path", "hop_count", "backbone_count", "rate", "fidelity"])
        for idx, path in enumerate(sorted(self.entries)):
            e = self.entries[path]
            writer.writerow(
                [
                    idx,
                    "-".join(map(str, path)),
                    len(path) - 1,
                    self.backbone_count.get(path, 0),
                    repr(e.rate),
                    repr(e.fidelity),
                ]
            )
        return buf.getvalue()


def _truncated(rng: np.random.Generator, mean: float, std: float, lo: float, hi: float, size: int) -> np.ndarray:
    if std == 0:
        return np.clip(np.full(size, mean), lo, hi)
    a, b = (lo - mean) / std, (hi - mean) / std
    return truncnorm.rvs(a, b, loc=mean, scale=std, size=size, random_state=rng)


def generate_capabilities(
    partition: PathPartition,
    graph: ResourceGraph,
    model: CapabilityModel,
    seed: int | np.random.Generator,
    version: int | None = None,
) -> CapabilitiesTable:
    """Sample one entry per allowed path.  Deterministic for a fixed seed."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    paths = partition.paths
    base_rate = _truncated(rng, model.base_rate_mean, model.base_rate_std, RATE_FLOOR, np.inf, len(paths))
    base_fid = _truncated(rng, model.base_fid_mean, model.base_fid_std, FIDELITY_FLOOR, 1.0, len(paths))
    entries: dict[Path, CapabilityEntry] = {}
    bb_count: dict[Path, int] = {}
    for path, r0, f0 in zip(paths, base_rate, base_fid):
        inner = path[1:-1]
        n_bb = sum(1 for v in inner if graph.kinds[v] is Kind.BACKBONE)
        extra_hops = len(inner) - 1 - n_bb
        rate = float(r0) * model.per_hop_rate_factor**extra_hops * model.per_backbone_rate_factor**n_bb
        fid = float(f0) - model.per_hop_fid_penalty * extra_hops - model.per_backbone_fid_penalty * n_bb
        entries[path] = CapabilityEntry(max(rate, RATE_FLOOR), min(1.0, max(FIDELITY_FLOOR, fid)))
        bb_count[path] = n_bb
    return CapabilitiesTable(entries, partition.version + 1 if version is None else version, bb_count)


def feasible_paths(
    table: CapabilitiesTable, src: ComponentId, dst: ComponentId, min_fidelity: float
) -> list[Path]:
    """Paths between src and dst meeting the fidelity floor, fastest first."""
    if src == dst:
        raise ValueError("src and dst must differ")
    pairs = table.__dict__.get("_pairs")
    if pairs is None:
        pairs = index_by_pair(table)
        object.__setattr__(table, "_pairs", pairs)
    candidates = pairs.get((min(src, dst), max(src, dst)), [])
    hits = [p for p in candidates if table.entries[p].fidelity >= min_fidelity]
    return sorted(hits, key=lambda p: (-table.entries[p].rate, p))


def index_by_pair(table: CapabilitiesTable) -> dict[tuple[ComponentId, ComponentId], list[Path]]:
    out: dict[tuple[ComponentId, ComponentId], list[Path]] = {}
    for p in table.entries:
        out.setdefault((p[0], p[-1]), []).append(p)
    return out


def regenerate(
    table: CapabilitiesTable,
    partition: PathPartition,
    graph: ResourceGraph,
    model: CapabilityModel,
    seed: int,
) -> CapabilitiesTable:
    """New table for a changed partition; the version always moves forward."""
    fresh = generate_capabilities(partition, graph, model, seed, version=table.version + 1)
    return fresh
