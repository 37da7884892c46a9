"""Scenario sweeps behind the experiment scripts and the acceptance suite."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Iterable, Sequence

from .config import ScenarioConfig, TopologyParams, config_from_mapping, load_config, with_changes
from .simulation import run_scenario

# (backbones, local areas, end nodes) of the random topology family
RANDOM_TOPOLOGY_ROWS: tuple[tuple[int, int, int], ...] = (
    (1, 2, 15),
    (2, 2, 15),
    (2, 2, 50),
    (2, 3, 30),
    (2, 3, 50),
    (3, 3, 30),
    (5, 4, 40),
    (6, 3, 35),
    (7, 5, 50),
    (12, 4, 40),
)
SMALL_ROWS = RANDOM_TOPOLOGY_ROWS[:2] + RANDOM_TOPOLOGY_ROWS[3:4]
EPSILONS = (1e-5, 0.01, 0.5)

RANDOM_FRACTIONS = {"interface": 0.2, "junction": 0.15, "backbone": 0.05}


def default_config(name: str) -> ScenarioConfig:
    """A shipped scenario config: ``configs/<name>.json`` if present, else built-in defaults."""
    local = FsPath(__file__).resolve().parents[2] / "configs" / f"{name}.json"
    if local.exists():
        return load_config(local)
    if name == "dumbbell":
        return ScenarioConfig(check_invariants=True)
    return config_from_mapping(
        {
            "topology": "random",
            "topology_params": {"backbones": 2, "local_areas": 2, "end_nodes": 15},
            "horizon_intervals": 150,
            "fractions": RANDOM_FRACTIONS,
            "check_invariants": True,
        }
    )


@dataclass
class CellResult:
    label: str
    epsilon: float
    bonus_enabled: bool
    seeds: int
    intervals: int
    wall_seconds: float
    summary: dict

    def row(self) -> dict:
        s = self.summary
        return {
            "topology": self.label,
            "epsilon": self.epsilon,
            "bonus_enabled": self.bonus_enabled,
            "seeds": self.seeds,
            "intervals": self.intervals,
            "wall_seconds": round(self.wall_seconds, 3),
            "minimal_service_proportion": s["minimal_service_proportion"],
            "acceptance_proportion": s["acceptance_proportion"],
            "bonus_proportion": s["bonus_proportion"],
            "mean_service_to_expiry": s["mean_service_to_expiry"],
            "demands_finished": s["demands_finished"],
            "t_total_max": s["timing"]["t_total"]["max"],
            "invariant_violations": s["invariant_violations"],
        }


def topology_label(row: Sequence[int]) -> str:
    return "/".join(str(v) for v in row)


def run_cell(cfg: ScenarioConfig, label: str, workers: int = 1) -> CellResult:
    start = time.perf_counter()
    report = run_scenario(cfg, workers=workers)
    wall = time.perf_counter() - start
    return CellResult(
        label, cfg.epsilon_service, cfg.bonus_enabled, len(cfg.seeds), cfg.horizon_intervals, wall, report.summary()
    )


def dumbbell_reliability(seeds: int = 20, intervals: int = 200, workers: int = 1) -> CellResult:
    cfg = with_changes(default_config("dumbbell"), seeds=tuple(range(seeds)), horizon_intervals=intervals)
    return run_cell(cfg, "dumbbell", workers)


def random_sweep(
    rows: Iterable[Sequence[int]] = SMALL_ROWS,
    epsilons: Iterable[float] = EPSILONS,
    bonus_modes: Iterable[bool] = (True,),
    seeds: int = 5,
    intervals: int = 150,
    workers: int = 1,
) -> list[CellResult]:
    """One cell per (topology row, epsilon, bonus mode); every cell reuses the same seeds."""
    base = default_config("random_small")
    out = []
    for row in rows:
        for eps in epsilons:
            for bonus in bonus_modes:
                cfg = with_changes(
                    base,
                    topology_params=TopologyParams(*row),
                    epsilon_service=eps,
                    bonus_enabled=bonus,
                    seeds=tuple(range(seeds)),
                    horizon_intervals=intervals,
                )
                out.append(run_cell(cfg, topology_label(row), workers))
    return out


def cells_to_csv(cells: Iterable[CellResult]) -> str:
    rows = [c.row() for c in cells]
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
