"""Scenario driver for the offset interval pipeline with mocked execution.

During each interval the controller registers newly submitted demands with a
start time two intervals ahead and schedules that later interval.  Meanwhile
it executes the schedule it computed two intervals earlier.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath
from typing import Iterable, Sequence

import numpy as np

from .capabilities import CapabilitiesTable, generate_capabilities
from .config import ApplicationSpec, Catalog, Fractions, ScenarioConfig
from .demand import (
    Accept,
    Demand,
    DemandManager,
    DemandMetadata,
    PacketSpec,
    PGT,
    Reject,
    Status,
    apply_decision,
    to_ns,
    to_s,
)
from .network import ComponentId, Network, PathPartition, ResourceGraph, dumbbell, random_topology
from .schedule import CompiledSchedule, NetworkSchedule, ScheduleStore, compile_schedule
from .scheduler import FillingClassSet, PhaseTimes, admit_tasks, compute_schedule, update_filling_classes
from .validate import validate_schedule

log = logging.getLogger(__name__)

OFFSET_INTERVALS = 2
STREAMS = ("topology", "capabilities", "assignment", "traffic", "execution")


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent named generators; adding a stream never perturbs the others."""
    return {name: np.random.default_rng([seed, idx]) for idx, name in enumerate(STREAMS)}


# ---------------------------------------------------------------------------
# application assignment
# ---------------------------------------------------------------------------


@dataclass
class DemandSource:
    source_id: int
    app: ApplicationSpec
    src: ComponentId
    dst: ComponentId
    kind: str
    next_submit: int  # ns
    active_demand: int | None = None


def pairs_by_kind(partition: PathPartition) -> dict[str, list[tuple[ComponentId, ComponentId]]]:
    out: dict[str, set] = {"interface": set(), "junction": set(), "backbone": set()}
    for key, paths in partition.cells.items():
        for p in paths:
            out[key.kind].add((p[0], p[-1]))
    return {k: sorted(v) for k, v in out.items()}


def assign_applications(
    graph: ResourceGraph,
    partition: PathPartition,
    fractions: Fractions,
    catalog: Catalog,
    seed: int | np.random.Generator,
) -> list[DemandSource]:
    """Give a random share of connected end-node pairs an application session.

    Pairs of two discoverable (server) nodes never submit.  Each node runs a
    platform drawn by share; a drawn application is kept only if both nodes'
    memory lifetimes cover its window floor.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    nodes = graph.end_nodes
    shares = np.array([p.share for p in catalog.platforms])
    lifetime = {
        n: catalog.platforms[int(i)].memory_lifetime
        for n, i in zip(nodes, rng.choice(len(shares), size=len(nodes), p=shares))
    }
    sources: list[DemandSource] = []
    by_kind = pairs_by_kind(partition)
    for kind in ("interface", "junction", "backbone"):
        frac = getattr(fractions, kind)
        for a, b in by_kind[kind]:
            if rng.random() >= frac:
                continue
            app = catalog.applications[int(rng.integers(len(catalog.applications)))]
            if a in graph.discoverable and b in graph.discoverable:
                continue
            if min(lifetime[a], lifetime[b]) < app.platform_window_floor:
                continue
            src, dst = (b, a) if a in graph.discoverable else (a, b)
            sources.append(DemandSource(len(sources), app, src, dst, kind, 0))
    return sources


# ---------------------------------------------------------------------------
# execution mocking
# ---------------------------------------------------------------------------


def execute_schedule(
    counts: dict[int, Sequence[int]],
    pgts: dict[int, PGT],
    remaining: dict[int, int],
    rng: np.random.Generator,
) -> dict[int, tuple[int, int | None]]:
    """Sample packet successes per task.

    ``counts`` maps a task to its PGA start times this interval.  Returns
    ``(successes, finishing start)``; the start is set when the task reaches
    its remaining need, sampled PGA by PGA so the moment is known.
    """
    out: dict[int, tuple[int, int | None]] = {}
    for pid in sorted(counts):
        starts = counts[pid]
        need = remaining.get(pid, 0)
        if need <= 0 or not starts:
            continue
        p = pgts[pid].p_packet
        if len(starts) < need:
            out[pid] = (int(rng.binomial(len(starts), p)), None)
            continue
        got = 0
        finish = None
        for s in sorted(starts):
            if rng.random() < p:
                got += 1
                if got == need:
                    finish = s
                    break
        out[pid] = (got, finish)
    return out


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


@dataclass
class DemandRecord:
    demand_id: int
    source_id: int
    t_submit: int
    t_start: int
    expiry: int
    n_inst: int
    outcome: str = "Queued"
    pgt: PGT | None = None
    accept_time: int | None = None
    satisfy_time: int | None = None
    successes: int = 0

    @property
    def minimal_service(self) -> bool | None:
        if self.outcome == "Satisfied":
            return True
        if self.outcome == "Expired":
            return False
        return None

    @property
    def service_to_expiry(self) -> float | None:
        if self.satisfy_time is None:
            return None
        return (self.satisfy_time - self.t_start) / (self.expiry - self.t_start)


@dataclass
class IntervalMetrics:
    seed: int
    interval: int
    active_pgts: int = 0
    submitted: int = 0
    registered: int = 0
    failed: int = 0
    accepted: int = 0
    rejected: int = 0
    satisfied: int = 0
    expired: int = 0
    pgas_minimal: int = 0
    pgas_bonus: int = 0
    t_update: float = 0.0
    t_admit: float = 0.0
    t_minimal: float = 0.0
    t_bonus: float = 0.0
    t_compile: float = 0.0
    t_total: float = 0.0
    good_accounting: int = 0
    invariant_violations: int = 0


@dataclass
class SeedResult:
    seed: int
    intervals: list[IntervalMetrics]
    demands: list[DemandRecord]
    events: list[dict]
    n_sources: int
    violations: list[str] = field(default_factory=list)
    final_schedule: CompiledSchedule | None = None  # last computed interval
    final_tasks: list[PGT] = field(default_factory=list)


# ---------------------------------------------------------------------------
# simulation state
# ---------------------------------------------------------------------------


def build_graph(cfg: ScenarioConfig, rng: np.random.Generator) -> ResourceGraph:
    if cfg.topology == "dumbbell":
        return dumbbell()
    if cfg.topology == "random":
        tp = cfg.topology_params
        return random_topology(tp.backbones, tp.local_areas, tp.end_nodes, int(rng.integers(2**31)))
    return ResourceGraph.load(cfg.topology)


class Simulation:
    def __init__(self, cfg: ScenarioConfig, seed: int) -> None:
        self.cfg = cfg
        self.seed = seed
        self.rng = rng_streams(seed)
        self.interval_ns = to_ns(cfg.T_SI_seconds)
        self.graph = build_graph(cfg, self.rng["topology"])
        self.network = Network.from_graph(self.graph, version=0)
        self.partition = self.network.partition
        self.table: CapabilitiesTable = generate_capabilities(
            self.partition, self.graph, cfg.capabilities, self.rng["capabilities"]
        )
        self.sources = assign_applications(
            self.graph, self.partition, cfg.fractions, cfg.catalog, self.rng["assignment"]
        )
        traffic = self.rng["traffic"]
        for s in self.sources:
            window = cfg.ramp_up_seconds if cfg.ramp_up_seconds is not None else s.app.expiry_rel
            s.next_submit = to_ns(traffic.uniform(0.0, window))
        self.manager = DemandManager(self.interval_ns, attempt_period=cfg.attempt_period)
        self.classes = FillingClassSet.empty(self.partition)
        self.computed: dict[int, NetworkSchedule] = {}
        self.store = ScheduleStore()
        self.records: dict[int, DemandRecord] = {}
        self.by_pgt: dict[int, DemandRecord] = {}
        self.active: dict[int, PGT] = {}
        self.intervals: list[IntervalMetrics] = []
        self.events: list[dict] = []
        self.violations: list[str] = []
        self._next_demand = 0
        self.interval = 0
        self.last_compiled: CompiledSchedule | None = None
        self.last_tasks: list[PGT] = []

    # -- helpers ------------------------------------------------------------

    def _event(self, now: int, demand_id: int, event: str, reason: str | None = None) -> None:
        rec = {"t": to_s(now), "demand_id": demand_id, "event": event}
        if reason is not None:
            rec["reason"] = reason
        self.events.append(rec)

    def _resubmit(self, source_id: int, now: int) -> None:
        src = self.sources[source_id]
        src.active_demand = None
        gap = self.rng["traffic"].exponential(src.app.resubmit_mean)
        src.next_submit = now + to_ns(gap)

    def _finish(self, rec: DemandRecord, outcome: Status, now: int) -> None:
        self.manager.ledger.move(rec.demand_id, outcome)
        rec.outcome = outcome.value
        if rec.pgt is not None:
            self.active.pop(rec.pgt.pgt_id, None)
        self._event(now, rec.demand_id, outcome.value.lower())
        self._resubmit(rec.source_id, now)

    # -- one interval ---------------------------------------------------------

    def step(self) -> IntervalMetrics:
        k = self.interval
        interval_ns = self.interval_ns
        t_now, t_end = k * interval_ns, (k + 1) * interval_ns
        target = k + OFFSET_INTERVALS
        t_target = target * interval_ns
        metrics = IntervalMetrics(self.seed, k)

        # (1) registration of demands submitted during this interval
        for src in self.sources:
            if src.active_demand is not None or src.next_submit >= t_end:
                continue
            app = src.app
            n_si = max(1, math.ceil(app.expiry_rel / self.cfg.T_SI_seconds - 1e-9))
            did = self._next_demand
            self._next_demand += 1
            demand = Demand(
                demand_id=did,
                packet=PacketSpec(app.window, app.pairs, app.min_fidelity),
                minsep=app.minsep,
                expiry=to_s(t_target + n_si * interval_ns),
                n_inst=app.n_inst,
                metadata=DemandMetadata(src.src, src.dst, self.table.version, f"{src.source_id}"),
                service_epsilon=self.cfg.epsilon_service,
            )
            rec = DemandRecord(
                did, src.source_id, max(src.next_submit, t_now), t_target, t_target + n_si * interval_ns, app.n_inst
            )
            self.records[did] = rec
            metrics.submitted += 1
            self._event(rec.t_submit, did, "submitted")
            result = self.manager.submit(demand, self.graph, self.table, t_target)
            if result.passed:
                metrics.registered += 1
                src.active_demand = did
                rec.outcome = Status.REGISTERED.value
            else:
                metrics.failed += 1
                rec.outcome = Status.FAILED.value
                self._event(rec.t_submit, did, "failed", result.reason.value)
                self._resubmit(src.source_id, rec.t_submit)

        # (2) scheduler: update, admit, compute
        t0 = time.perf_counter()
        upd = update_filling_classes(
            self.classes, self.manager.terminations.read_and_flush(), self.partition, t_target, interval_ns
        )
        self.classes = upd.classes
        t1 = time.perf_counter()
        intake = self.manager.intake.read_and_flush()
        self.classes, accepted, rejected = admit_tasks(intake, self.classes, interval_ns)
        t2 = time.perf_counter()
        metrics.good_accounting = self.classes.good_accounting()
        if metrics.good_accounting > interval_ns:
            self._violation(metrics, f"good accounting {metrics.good_accounting} exceeds interval")
        phase = PhaseTimes()
        budget = self.cfg.bonus_budget_fraction * self.cfg.T_SI_seconds
        schedule = compute_schedule(
            self.classes, interval_ns, self.cfg.bonus_enabled, target, self.partition.version, budget, phase
        )
        t3 = time.perf_counter()
        compiled = compile_schedule(schedule)
        self.store.put(compiled)
        self.store.drop_before(k)
        self.last_compiled, self.last_tasks = compiled, self.classes.tasks()
        t4 = time.perf_counter()
        metrics.t_update, metrics.t_admit = t1 - t0, t2 - t1
        metrics.t_minimal, metrics.t_bonus, metrics.t_compile = phase.minimal, phase.bonus, t4 - t3
        metrics.t_total = t4 - t0
        metrics.pgas_minimal, metrics.pgas_bonus = schedule.minimal_pgas, schedule.bonus_pgas
        metrics.active_pgts = len(self.classes)
        self.computed[target] = schedule

        for d in accepted:
            rec = self.records[d.demand_id]
            apply_decision(self.manager.ledger, d.demand_id, Accept(d.pgt))
            self.manager.ledger.move(d.demand_id, Status.ACTIVE)
            rec.outcome = Status.ACTIVE.value
            rec.pgt = d.pgt
            rec.accept_time = t_end
            self.by_pgt[d.pgt.pgt_id] = rec
            self.active[d.pgt.pgt_id] = d.pgt
            metrics.accepted += 1
            self._event(t_end, d.demand_id, "accepted")
        for d in rejected:
            rec = self.records[d.demand_id]
            apply_decision(self.manager.ledger, d.demand_id, Reject())
            rec.outcome = Status.REJECTED.value
            metrics.rejected += 1
            self._event(t_end, d.demand_id, "rejected", "SchedulerReject")
            self._resubmit(rec.source_id, t_end)
        for gone in upd.removed:
            rec = self.by_pgt.get(gone.pgt_id)
            if rec is not None and rec.outcome == Status.ACTIVE.value:
                self._finish(rec, Status.REMOVED, t_now)

        if self.cfg.check_invariants:
            self._check_schedule(schedule, metrics)

        # (3) execute the schedule computed two intervals ago
        current = self.computed.pop(k, None)
        if current is not None:
            self._execute(current, t_now, metrics)
        for pid, pgt in list(self.active.items()):
            rec = self.by_pgt[pid]
            if rec.expiry <= t_end and rec.outcome == Status.ACTIVE.value:
                metrics.expired += 1
                self._finish(rec, Status.EXPIRED, rec.expiry)
        self.intervals.append(metrics)
        self.interval += 1
        return metrics

    def _execute(self, schedule: NetworkSchedule, t_now: int, metrics: IntervalMetrics) -> None:
        live = {
            pid: starts
            for pid, starts in schedule.task_starts.items()
            if pid in self.active and self.by_pgt[pid].outcome == Status.ACTIVE.value
        }
        remaining = {pid: self.by_pgt[pid].n_inst - self.by_pgt[pid].successes for pid in live}
        results = execute_schedule(live, self.active, remaining, self.rng["execution"])
        for pid, (got, finish) in results.items():
            rec = self.by_pgt[pid]
            rec.successes += got
            if finish is not None:
                pgt = self.active[pid]
                rec.satisfy_time = t_now + finish + pgt.duration
                metrics.satisfied += 1
                self.manager.terminate(pid)
                self._finish(rec, Status.SATISFIED, rec.satisfy_time)

    def _violation(self, metrics: IntervalMetrics, text: str) -> None:
        metrics.invariant_violations += 1
        self.violations.append(f"seed {self.seed} interval {metrics.interval}: {text}")

    def _check_schedule(self, schedule: NetworkSchedule, metrics: IntervalMetrics) -> None:
        report = validate_schedule(schedule.export(), self.classes.tasks(), self.interval_ns)
        if not report.ok:
            self._violation(metrics, f"schedule invalid: {report.summary()}")

    def run(self, intervals: int) -> SeedResult:
        for _ in range(intervals):
            self.step()
        return SeedResult(
            self.seed,
            self.intervals,
            sorted(self.records.values(), key=lambda r: r.demand_id),
            self.events,
            len(self.sources),
            self.violations,
            self.last_compiled,
            self.last_tasks,
        )


def step_interval(sim: Simulation) -> IntervalMetrics:
    return sim.step()


# ---------------------------------------------------------------------------
# aggregation and output
# ---------------------------------------------------------------------------


@dataclass
class ScenarioReport:
    config: ScenarioConfig
    results: list[SeedResult]

    def summary(self) -> dict:
        demands = [d for r in self.results for d in r.demands]
        ivs = [i for r in self.results for i in r.intervals]
        finished = [d.minimal_service for d in demands if d.minimal_service is not None]
        ste = [d.service_to_expiry for d in demands if d.service_to_expiry is not None]
        submitted = sum(i.submitted for i in ivs)
        registered = sum(i.registered for i in ivs)
        accepted = sum(i.accepted for i in ivs)
        minimal = sum(i.pgas_minimal for i in ivs)
        bonus = sum(i.pgas_bonus for i in ivs)

        def stats(name: str) -> dict:
            vals = np.array([getattr(i, name) for i in ivs]) if ivs else np.zeros(1)
            return {"mean": float(vals.mean()), "max": float(vals.max())}

        return {
            "seeds": [r.seed for r in self.results],
            "intervals": len(ivs),
            "epsilon_service": self.config.epsilon_service,
            "bonus_enabled": self.config.bonus_enabled,
            "sources_mean": float(np.mean([r.n_sources for r in self.results])),
            "demands_submitted": submitted,
            "demands_registered": registered,
            "demands_accepted": accepted,
            "demands_finished": len(finished),
            "minimal_service_proportion": (sum(finished) / len(finished)) if finished else None,
            "acceptance_proportion": accepted / submitted if submitted else None,
            "registered_acceptance_proportion": accepted / registered if registered else None,
            "registration_pass_proportion": registered / submitted if submitted else None,
            "mean_service_to_expiry": float(np.mean(ste)) if ste else None,
            "bonus_proportion": bonus / (minimal + bonus) if minimal + bonus else 0.0,
            "pgas_minimal": minimal,
            "pgas_bonus": bonus,
            "active_pgts_mean": float(np.mean([i.active_pgts for i in ivs])) if ivs else 0.0,
            "timing": {n: stats(n) for n in ("t_update", "t_admit", "t_minimal", "t_bonus", "t_compile", "t_total")},
            "invariant_violations": sum(i.invariant_violations for i in ivs),
        }

    def metrics_csv(self) -> str:
        buf = io.StringIO()
        names = list(IntervalMetrics.__dataclass_fields__)
        writer = csv.writer(buf)
        writer.writerow(names)
        for r in self.results:
            for i in r.intervals:
                writer.writerow([getattr(i, n) for n in names])
        return buf.getvalue()

    def events_jsonl(self) -> str:
        lines = []
        for r in self.results:
            for e in r.events:
                lines.append(json.dumps({"seed": r.seed, **e}, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")

    def write(self, out_dir: str | FsPath) -> dict[str, FsPath]:
        out = FsPath(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "metrics": out / "metrics.csv",
            "summary": out / "summary.json",
            "events": out / "events.jsonl",
        }
        paths["metrics"].write_text(self.metrics_csv())
        paths["summary"].write_text(json.dumps(self.summary(), indent=2, sort_keys=True))
        paths["events"].write_text(self.events_jsonl())
        return paths


def run_seed(cfg: ScenarioConfig, seed: int) -> SeedResult:
    return Simulation(cfg, seed).run(cfg.horizon_intervals)


def run_scenario(
    cfg: ScenarioConfig,
    seeds: Iterable[int] | None = None,
    out_dir: str | FsPath | None = None,
    workers: int = 1,
) -> ScenarioReport:
    """Run every seed and aggregate.  ``workers > 1`` fans seeds out to processes."""
    cfg.check()
    seed_list = list(cfg.seeds if seeds is None else seeds)
    if workers > 1 and len(seed_list) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_seed, [cfg] * len(seed_list), seed_list))
    else:
        results = [run_seed(cfg, s) for s in seed_list]
    report = ScenarioReport(cfg, results)
    if out_dir is not None:
        report.write(out_dir)
    return report


def demand_table(result: SeedResult) -> list[dict]:
    rows = []
    for d in result.demands:
        row = asdict(d)
        row.pop("pgt")
        row["minimal_service"] = d.minimal_service
        row["service_to_expiry"] = d.service_to_expiry
        rows.append(row)
    return rows
