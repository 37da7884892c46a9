"""Independent schedule checker.

Works from raw per-resource PGA lists and the task records only; it shares
no code with the scheduler so it can serve as an oracle for it.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .demand import PGT
from .network import ComponentId
from .schedule import PGA


@dataclass
class ValidationReport:
    conflicts: list[tuple[ComponentId, PGA, PGA]] = field(default_factory=list)
    minsep_violations: list[tuple[int, int, int]] = field(default_factory=list)  # pgt, end, next start
    shortfalls: list[tuple[int, int, int]] = field(default_factory=list)  # pgt, count, required
    overruns: list[PGA] = field(default_factory=list)
    misaligned: list[int] = field(default_factory=list)
    unknown: list[int] = field(default_factory=list)
    bad_duration: list[PGA] = field(default_factory=list)
    max_end: int = 0

    @property
    def valid(self) -> bool:
        """No conflicts, violations, overruns or alignment faults."""
        return not (
            self.conflicts or self.minsep_violations or self.overruns or self.misaligned
            or self.unknown or self.bad_duration
        )

    @property
    def ok(self) -> bool:
        """Valid and every task got its minimal allocation."""
        return self.valid and not self.shortfalls

    def summary(self) -> dict:
        return {
            "valid": self.valid,
            "minimal_allocations_met": not self.shortfalls,
            "conflicts": len(self.conflicts),
            "minsep_violations": len(self.minsep_violations),
            "shortfalls": len(self.shortfalls),
            "overruns": len(self.overruns),
            "misaligned": len(self.misaligned),
            "unknown_tasks": len(self.unknown),
            "bad_durations": len(self.bad_duration),
            "max_end_ns": self.max_end,
        }


def validate_schedule(
    per_resource: Mapping[ComponentId, Sequence[PGA]],
    tasks: Iterable[PGT],
    T_SI: int,
    require_minimal: bool = True,
) -> ValidationReport:
    report = ValidationReport()
    by_id = {t.pgt_id: t for t in tasks}
    spans: dict[int, dict[ComponentId, list[tuple[int, int]]]] = defaultdict(lambda: defaultdict(list))

    for r, pgas in per_resource.items():
        ordered = sorted(pgas, key=lambda p: (p.start, p.end))
        for a, b in zip(ordered, ordered[1:]):
            if b.start < a.end:
                report.conflicts.append((r, a, b))
        for p in ordered:
            report.max_end = max(report.max_end, p.end)
            if p.end > T_SI or p.start < 0:
                report.overruns.append(p)
            task = by_id.get(p.pgt_id)
            if task is None:
                if p.pgt_id not in report.unknown:
                    report.unknown.append(p.pgt_id)
                continue
            if p.end - p.start != task.duration:
                report.bad_duration.append(p)
            spans[p.pgt_id][r].append((p.start, p.end))

    for pid, task in by_id.items():
        per_r = spans.get(pid, {})
        internal = task.path[1:-1]
        reference = sorted(per_r.get(internal[0], [])) if internal else []
        if any(sorted(per_r.get(r, [])) != reference for r in internal) or set(per_r) - set(internal):
            report.misaligned.append(pid)
        for (s0, e0), (s1, _) in zip(reference, reference[1:]):
            if s1 - e0 < task.minsep:
                report.minsep_violations.append((pid, e0, s1))
        if require_minimal and len(reference) < task.min_alloc:
            report.shortfalls.append((pid, len(reference), task.min_alloc))
    return report
