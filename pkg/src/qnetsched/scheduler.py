"""Network Scheduler: admission control over filling classes plus the two-phase schedule.

Classes follow the path partition one-to-one.  Admission reserves, on every
resource associated with a class, the class's required time; a task is
accepted only if no reservation then exceeds the interval.  The schedule is
built class by class in a fixed linear extension of the strict-superset
order on associated resources, which keeps blocks of comparable classes
sequential and lets incomparable (disjoint) classes overlap freely.
"""

from __future__ import annotations

import heapq
import time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .demand import PGT
from .network import CellKey, ComponentId, PathPartition
from .schedule import NetworkSchedule

INF = float("inf")


# ---------------------------------------------------------------------------
# filling classes
# ---------------------------------------------------------------------------


def calculate_required_time(tasks: Sequence[PGT]) -> int:
    """Upper bound on the length of a sequentially valid minimal schedule.

    ``tasks`` must be sorted by minimal allocation.  Suffix maxima and sums
    make this linear in the number of tasks.
    """
    total = 0
    suffix_sum = 0
    suffix_max = 0
    # walk from the back so suffix quantities are available at each index
    allocs = [t.min_alloc for t in tasks]
    for x in range(len(tasks) - 1, -1, -1):
        t = tasks[x]
        suffix_sum += t.duration
        suffix_max = max(suffix_max, t.duration + t.minsep)
        cycle = max(suffix_max, suffix_sum)
        n_x = allocs[x] - (allocs[x - 1] if x > 0 else 1)
        total += n_x * cycle + t.duration
    return total


@dataclass
class FillingClass:
    cell: CellKey
    tasks: list[PGT] = field(default_factory=list)
    required_time: int = 0

    def with_task(self, pgt: PGT) -> list[PGT]:
        keys = [t.sort_key for t in self.tasks]
        pos = bisect_left(keys, pgt.sort_key)
        return self.tasks[:pos] + [pgt] + self.tasks[pos:]

    def refresh(self) -> None:
        self.required_time = calculate_required_time(self.tasks)


@dataclass
class FillingClassSet:
    classes: dict[CellKey, FillingClass]
    xi: Mapping[CellKey, frozenset[ComponentId]]
    partition: PathPartition
    order: tuple[CellKey, ...]
    greater: Mapping[CellKey, tuple[CellKey, ...]]

    @classmethod
    def empty(cls, partition: PathPartition) -> "FillingClassSet":
        xi = dict(partition.xi)
        order = tuple(sorted(partition.cells))
        greater = {k: tuple(partition.greater(k)) for k in order}
        classes = {k: FillingClass(k) for k in order}
        return cls(classes, xi, partition, order, greater)

    @property
    def version(self) -> int:
        return self.partition.version

    def copy(self) -> "FillingClassSet":
        classes = {k: FillingClass(k, list(c.tasks), c.required_time) for k, c in self.classes.items()}
        return FillingClassSet(classes, self.xi, self.partition, self.order, self.greater)

    def cell_for(self, pgt: PGT) -> CellKey | None:
        return self.partition.cell_of.get(pgt.path)

    def tasks(self) -> list[PGT]:
        return [t for k in self.order for t in self.classes[k].tasks]

    def __len__(self) -> int:
        return sum(len(c.tasks) for c in self.classes.values())

    def find(self, pgt_id: int) -> PGT | None:
        for c in self.classes.values():
            for t in c.tasks:
                if t.pgt_id == pgt_id:
                    return t
        return None

    def reserved(self) -> dict[ComponentId, int]:
        """Per-resource reserved time: the sum of required times of classes touching it."""
        out: dict[ComponentId, int] = {}
        for k, c in self.classes.items():
            if c.required_time:
                for r in self.xi[k]:
                    out[r] = out.get(r, 0) + c.required_time
        return out

    def good_accounting(self) -> int:
        """Largest required-time sum over a chain of nested classes."""
        return max(self.reserved().values(), default=0)

    def block_start(self, key: CellKey) -> int:
        return sum(self.classes[g].required_time for g in self.greater[key])


# ---------------------------------------------------------------------------
# admission
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Decision:
    demand_id: int
    pgt: PGT | None  # None for a rejection


def admit_tasks(
    intake: Iterable[Sequence[PGT]], classes: FillingClassSet, T_SI: int
) -> tuple[FillingClassSet, list[Decision], list[Decision]]:
    """Front-to-back admission with per-resource time accounting."""
    out = classes.copy()
    avail: dict[ComponentId, int] = {}
    for k, c in out.classes.items():
        for r in out.xi[k]:
            avail[r] = avail.get(r, T_SI) - c.required_time
    accepted: list[Decision] = []
    rejected: list[Decision] = []
    for alternatives in intake:
        if not alternatives:
            continue
        done = False
        for pgt in alternatives:
            key = out.cell_for(pgt)
            if key is None:
                continue
            fc = out.classes[key]
            trial = fc.with_task(pgt)
            new_r = calculate_required_time(trial)
            delta = new_r - fc.required_time
            resources = out.xi[key]
            if all(avail.get(r, T_SI) >= delta for r in resources):
                fc.tasks = trial
                fc.required_time = new_r
                for r in resources:
                    avail[r] = avail.get(r, T_SI) - delta
                accepted.append(Decision(pgt.demand_id, pgt))
                done = True
                break
        if not done:
            rejected.append(Decision(alternatives[0].demand_id, None))
    return out, accepted, rejected


@dataclass
class UpdateResult:
    classes: FillingClassSet
    terminated: list[PGT] = field(default_factory=list)
    expired: list[PGT] = field(default_factory=list)
    removed: list[PGT] = field(default_factory=list)
    rehomed: list[tuple[PGT, PGT]] = field(default_factory=list)


def update_filling_classes(
    prev: FillingClassSet,
    terminations: Iterable[int],
    partition: PathPartition,
    now: int,
    T_SI: int | None = None,
    readmit: Callable[[PGT], Sequence[PGT]] | None = None,
) -> UpdateResult:
    """Drop terminated and expired tasks; re-home tasks if the partition changed.

    A task whose path left the partition is offered the alternatives returned
    by ``readmit`` (if given) through normal admission; if none is admitted it
    is reported as removed.
    """
    term = set(terminations)
    result = UpdateResult(prev)
    keep: list[PGT] = []
    for pgt in prev.tasks():
        if pgt.pgt_id in term:
            result.terminated.append(pgt)
        elif pgt.t_expiry <= now:
            result.expired.append(pgt)
        else:
            keep.append(pgt)
    if partition.version == prev.version and partition is prev.partition:
        if not result.terminated and not result.expired:
            return result
        out = prev.copy()
        gone = {p.pgt_id for p in result.terminated + result.expired}
        for c in out.classes.values():
            if any(t.pgt_id in gone for t in c.tasks):
                c.tasks = [t for t in c.tasks if t.pgt_id not in gone]
                c.refresh()
        result.classes = out
        return result

    out = FillingClassSet.empty(partition)
    homeless: list[PGT] = []
    for pgt in keep:
        key = out.cell_for(pgt)
        if key is None:
            homeless.append(pgt)
        else:
            out.classes[key].tasks.append(pgt)
    for c in out.classes.values():
        c.tasks.sort(key=lambda t: t.sort_key)
        c.refresh()
    for pgt in homeless:
        alts = [a for a in (readmit(pgt) if readmit else ()) if out.cell_for(a) is not None]
        if alts and T_SI is not None:
            out, acc, _ = admit_tasks([alts], out, T_SI)
            if acc:
                result.rehomed.append((pgt, acc[0].pgt))
                continue
        result.removed.append(pgt)
    result.classes = out
    return result


# ---------------------------------------------------------------------------
# minimal allocation phase
# ---------------------------------------------------------------------------


def direct_allocation(fc: FillingClass, schedule: NetworkSchedule, t0: int) -> NetworkSchedule:
    """Append the cycle-structured minimal block of one class starting at ``t0``.

    Stage ``m`` repeats ``n_m`` cycles of length ``c_m`` in which tasks
    ``m..M-1`` run back to back, then gives task ``m`` its final PGA.
    """
    tasks = fc.tasks
    count = len(tasks)
    if not count:
        return schedule
    for t in tasks:
        schedule.register(t)
    cycle = [0] * count
    suffix_sum = 0
    suffix_max = 0
    for x in range(count - 1, -1, -1):
        suffix_sum += tasks[x].duration
        suffix_max = max(suffix_max, tasks[x].duration + tasks[x].minsep)
        cycle[x] = max(suffix_max, suffix_sum)
    start = t0
    prev_alloc = 1
    for m in range(count):
        n_m = tasks[m].min_alloc - prev_alloc
        prev_alloc = tasks[m].min_alloc
        c_m = cycle[m]
        for k in range(n_m):
            offset = start + k * c_m
            for x in range(m, count):
                schedule.add_pga(tasks[x].pgt_id, offset)
                offset += tasks[x].duration
        schedule.add_pga(tasks[m].pgt_id, start + n_m * c_m)
        start += n_m * c_m + tasks[m].duration
    return schedule


def minimal_allocation_phase(
    classes: FillingClassSet, T_SI: int, interval_index: int = 0, version: int = 0
) -> NetworkSchedule:
    schedule = NetworkSchedule(T_SI, interval_index, version)
    for key in classes.order:
        fc = classes.classes[key]
        if fc.tasks:
            direct_allocation(fc, schedule, classes.block_start(key))
    return schedule


# ---------------------------------------------------------------------------
# bonus allocation phase
# ---------------------------------------------------------------------------


class _Releases:
    """Pending release times, at most one per task."""

    def __init__(self) -> None:
        self.heap: list[tuple[int, int]] = []
        self.pending: dict[int, int] = {}

    def add(self, pgt_id: int, when: int) -> None:
        if pgt_id in self.pending:
            return
        self.pending[pgt_id] = when
        heapq.heappush(self.heap, (when, pgt_id))

    def peek(self) -> int | None:
        return self.heap[0][0] if self.heap else None

    def pop(self) -> None:
        _, pid = heapq.heappop(self.heap)
        del self.pending[pid]


def _left_violation(starts: list[int], duration: int, minsep: int, candidate: int) -> int | None:
    """Release time if an earlier PGA of the task ends less than minsep before ``t``."""
    idx = bisect_right(starts, candidate) - 1
    if idx < 0:
        return None
    release = starts[idx] + duration + minsep
    return release if release > candidate else None


def _right_violation(starts: list[int], duration: int, minsep: int, candidate: int) -> bool:
    idx = bisect_right(starts, candidate)
    return idx < len(starts) and starts[idx] < candidate + duration + minsep


def round_robin_bonus(
    fc: FillingClass,
    schedule: NetworkSchedule,
    T_SI: int,
    deadline: float | None = None,
) -> NetworkSchedule:
    """Fill idle time with extra PGAs, visiting tasks round-robin.

    Candidate start times are the ends of PGAs on the class's resources and
    pending release times.  A candidate at which every task's path is busy
    cannot host a PGA, so it is skipped without a round-robin pass.
    """
    tasks = fc.tasks
    count = len(tasks)
    if not count:
        return schedule
    infos = [schedule.register(task) for task in tasks]
    ids = [task.pgt_id for task in tasks]
    durations = [task.duration for task in tasks]
    minseps = [task.minsep for task in tasks]
    starts = [schedule.task_starts[i] for i in ids]
    timelines = [[schedule.timeline(r) for r in info.resources] for info in infos]
    paths: dict[tuple, list] = {}
    for info, tls in zip(infos, timelines):
        paths.setdefault(info.resources, tls)
    path_groups = list(paths.values())
    used = {r: schedule.timeline(r) for info in infos for r in info.resources}
    class_timelines = list(used.values())
    releases = _Releases()

    def next_start(after: int) -> float:
        ends = [e for e in (tl.next_end_after(after) for tl in class_timelines) if e is not None]
        t_s = min(ends) if ends else INF
        t_r = releases.peek()
        if t_r is None:
            return t_s
        if t_r <= t_s:
            releases.pop()
        return min(t_s, t_r)

    # time zero is a candidate too: nothing can end there, yet it may be idle
    t_est: float = 0
    cursor = 0
    while t_est < T_SI:
        if deadline is not None and time.perf_counter() > deadline:
            break
        candidate = int(t_est)
        if all(any(tl.busy_at(candidate) for tl in group) for group in path_groups):
            t_est = next_start(candidate)
            continue
        for step in range(count):
            i = (cursor + step) % count
            duration = durations[i]
            free = candidate + duration < T_SI and all(tl.free(candidate, candidate + duration) for tl in timelines[i])
            ms = minseps[i]
            left = _left_violation(starts[i], duration, ms, candidate)
            if free and left is None and not _right_violation(starts[i], duration, ms, candidate):
                schedule.add_pga(ids[i], candidate, bonus=True)
                cursor = i
            elif left is not None:
                releases.add(ids[i], left)
        t_est = next_start(candidate)
    return schedule


# ---------------------------------------------------------------------------
# full computation
# ---------------------------------------------------------------------------


@dataclass
class PhaseTimes:
    minimal: float = 0.0
    bonus: float = 0.0
    compile: float = 0.0


def compute_schedule(
    classes: FillingClassSet,
    T_SI: int,
    bonus: bool = True,
    interval_index: int = 0,
    version: int = 0,
    budget_seconds: float | None = None,
    times: PhaseTimes | None = None,
) -> NetworkSchedule:
    """Minimal phase then (optionally) the bonus phase, classes in topological order."""
    times = times if times is not None else PhaseTimes()
    t0 = time.perf_counter()
    schedule = minimal_allocation_phase(classes, T_SI, interval_index, version)
    t1 = time.perf_counter()
    times.minimal = t1 - t0
    if bonus:
        deadline = None if budget_seconds is None else t0 + budget_seconds
        for key in classes.order:
            fc = classes.classes[key]
            if fc.tasks:
                round_robin_bonus(fc, schedule, T_SI, deadline)
    times.bonus = time.perf_counter() - t1
    return schedule
