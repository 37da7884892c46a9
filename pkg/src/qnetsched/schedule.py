"""Aligned per-resource schedules and their serialization.

A schedule lives inside one scheduling interval; all times are integer
nanoseconds relative to the interval start.  Every PGA of a task is written
to each internal resource of its path with identical ``(start, end)``.
"""

from __future__ import annotations

import json
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple

from .demand import PGT
from .network import ComponentId, Path


class PGA(NamedTuple):
    pgt_id: int
    demand_id: int
    start: int
    end: int
    resource: ComponentId


class Timeline:
    """Non-overlapping busy blocks on one resource, sorted by start."""

    __slots__ = ("starts", "ends", "owners")

    def __init__(self) -> None:
        self.starts: list[int] = []
        self.ends: list[int] = []
        self.owners: list[int] = []

    def __len__(self) -> int:
        return len(self.starts)

    def add(self, start: int, end: int, owner: int) -> None:
        if not self.starts or start >= self.starts[-1]:
            self.starts.append(start)
            self.ends.append(end)
            self.owners.append(owner)
            return
        pos = bisect_left(self.starts, start)
        self.starts.insert(pos, start)
        self.ends.insert(pos, end)
        self.owners.insert(pos, owner)

    def busy_at(self, time: int) -> bool:
        idx = bisect_right(self.starts, time) - 1
        return idx >= 0 and self.ends[idx] > time

    def free(self, start: int, end: int) -> bool:
        """True iff nothing overlaps ``[start, end)``."""
        idx = bisect_left(self.starts, end) - 1
        return idx < 0 or self.ends[idx] <= start

    def next_end_after(self, time: int) -> int | None:
        idx = bisect_right(self.ends, time)
        return self.ends[idx] if idx < len(self.ends) else None

    def last_end(self) -> int:
        return self.ends[-1] if self.ends else 0


@dataclass(frozen=True)
class TaskInfo:
    demand_id: int
    path: Path
    duration: int
    minsep: int

    @property
    def resources(self) -> Path:
        return self.path[1:-1]


class NetworkSchedule:
    def __init__(self, T_SI: int, interval_index: int = 0, version: int = 0) -> None:
        self.T_SI = T_SI
        self.interval_index = interval_index
        self.version = version
        self.timelines: dict[ComponentId, Timeline] = {}
        self.tasks: dict[int, TaskInfo] = {}
        self.task_starts: dict[int, list[int]] = {}
        self.minimal_pgas = 0
        self.bonus_pgas = 0

    def register(self, pgt: PGT) -> TaskInfo:
        info = self.tasks.get(pgt.pgt_id)
        if info is None:
            info = TaskInfo(pgt.demand_id, pgt.path, pgt.duration, pgt.minsep)
            self.tasks[pgt.pgt_id] = info
            self.task_starts[pgt.pgt_id] = []
        return info

    def timeline(self, resource: ComponentId) -> Timeline:
        tl = self.timelines.get(resource)
        if tl is None:
            tl = self.timelines[resource] = Timeline()
        return tl

    def add_pga(self, pgt_id: int, start: int, bonus: bool = False) -> None:
        info = self.tasks[pgt_id]
        end = start + info.duration
        for r in info.resources:
            self.timeline(r).add(start, end, pgt_id)
        starts = self.task_starts[pgt_id]
        if not starts or start > starts[-1]:
            starts.append(start)
        else:
            insort(starts, start)
        if bonus:
            self.bonus_pgas += 1
        else:
            self.minimal_pgas += 1

    def pga_count(self, pgt_id: int) -> int:
        return len(self.task_starts.get(pgt_id, ()))

    def counts(self) -> dict[int, int]:
        return {pid: len(s) for pid, s in self.task_starts.items()}

    def makespan(self) -> int:
        return max((tl.last_end() for tl in self.timelines.values()), default=0)

    def pgas(self, resource: ComponentId) -> list[PGA]:
        tl = self.timelines.get(resource)
        if tl is None:
            return []
        return [
            PGA(owner, self.tasks[owner].demand_id, s, e, resource) for s, e, owner in zip(tl.starts, tl.ends, tl.owners)
        ]

    def export(self) -> dict[ComponentId, list[PGA]]:
        """Per-resource PGA lists, the raw form consumed by the validator."""
        return {r: self.pgas(r) for r in sorted(self.timelines)}


# ---------------------------------------------------------------------------
# compilation for distribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompiledSchedule:
    interval_index: int
    version: int
    per_component: Mapping[ComponentId, tuple[dict, ...]]

    def __getitem__(self, component: ComponentId) -> tuple[dict, ...]:
        return self.per_component.get(component, ())

    def to_jsonl(self) -> str:
        lines = []
        for comp in sorted(self.per_component):
            lines.append(
                json.dumps(
                    {
                        "component_id": comp,
                        "interval": self.interval_index,
                        "version": self.version,
                        "pgas": [
                            {"pgt": e["pgt_id"], "demand": e["demand_id"], "start_ns": e["start"], "end_ns": e["end"]}
                            for e in self.per_component[comp]
                        ],
                    },
                    sort_keys=True,
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "CompiledSchedule":
        per: dict[ComponentId, tuple[dict, ...]] = {}
        interval = version = 0
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            interval, version = rec["interval"], rec["version"]
            per[int(rec["component_id"])] = tuple(
                {"pgt_id": p["pgt"], "demand_id": p["demand"], "start": p["start_ns"], "end": p["end_ns"]}
                for p in rec["pgas"]
            )
        return cls(interval, version, per)

    def pga_lists(self, internal: Iterable[ComponentId]) -> dict[ComponentId, list[PGA]]:
        """Back to validator input, restricted to internal resources."""
        keep = set(internal)
        return {
            c: [PGA(e["pgt_id"], e["demand_id"], e["start"], e["end"], c) for e in entries]
            for c, entries in self.per_component.items()
            if c in keep
        }


def compile_schedule(schedule: NetworkSchedule) -> CompiledSchedule:
    """One flat record list per component on any scheduled path, end nodes included."""
    per: dict[ComponentId, list[dict]] = {}
    for pid in sorted(schedule.tasks):
        info = schedule.tasks[pid]
        for start in schedule.task_starts[pid]:
            rec = {"pgt_id": pid, "demand_id": info.demand_id, "start": start, "end": start + info.duration}
            for comp in info.path:
                per.setdefault(comp, []).append(rec)
    out = {
        c: tuple(sorted(recs, key=lambda e: (e["start"], e["pgt_id"]))) for c, recs in per.items()
    }
    return CompiledSchedule(schedule.interval_index, schedule.version, out)


@dataclass
class ScheduleStore:
    """Compiled schedules keyed by (interval, version)."""

    entries: dict[tuple[int, int], CompiledSchedule] = field(default_factory=dict)

    def put(self, compiled: CompiledSchedule) -> None:
        self.entries[(compiled.interval_index, compiled.version)] = compiled

    def get(self, interval: int, version: int | None = None) -> CompiledSchedule | None:
        if version is not None:
            return self.entries.get((interval, version))
        versions = [v for (i, v) in self.entries if i == interval]
        return self.entries[(interval, max(versions))] if versions else None

    def for_component(self, interval: int, component: ComponentId) -> tuple[dict, ...]:
        compiled = self.get(interval)
        return compiled[component] if compiled else ()

    def drop_before(self, interval: int) -> None:
        for key in [k for k in self.entries if k[0] < interval]:
            del self.entries[key]

    def __iter__(self) -> Iterator[CompiledSchedule]:
        return iter(self.entries.values())
