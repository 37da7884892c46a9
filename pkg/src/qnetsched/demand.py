"""Demand Manager: registration checks, PGT creation, buffers and status ledger.

All controller-side times are integer nanoseconds.  Demands arrive with
seconds (as end nodes would express them) and are converted once on entry.
"""

from __future__ import annotations

import enum
import itertools
import math
import threading
from collections import deque
from dataclasses import dataclass, field
from numbers import Integral, Real
from typing import Iterable, Sequence

from .capabilities import CapabilitiesTable, CapabilityEntry, feasible_paths
from .network import ComponentId, Kind, Path, ResourceGraph
from .stats import Unsatisfiable, duration_for_probability, minimal_allocation

NS_PER_S = 1_000_000_000
DEFAULT_P_GRID: tuple[float, ...] = tuple(round(0.05 * i, 2) for i in range(1, 20))
DEFAULT_ATTEMPT_PERIOD = 0.01


def to_ns(seconds: float) -> int:
    return int(round(seconds * NS_PER_S))


def to_s(ns: int) -> float:
    return ns / NS_PER_S


# ---------------------------------------------------------------------------
# demand and task records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PacketSpec:
    window: float  # seconds
    pairs: int
    min_fidelity: float


@dataclass(frozen=True)
class DemandMetadata:
    src: ComponentId
    dst: ComponentId
    capability_version: int
    session_id: str = ""


@dataclass(frozen=True)
class Demand:
    demand_id: int
    packet: PacketSpec
    minsep: float  # seconds
    expiry: float  # absolute seconds
    n_inst: int
    metadata: DemandMetadata
    service_epsilon: float = 1e-5


@dataclass(frozen=True)
class PGT:
    """Packet generation task.  Durations and times in nanoseconds."""

    pgt_id: int
    demand_id: int
    duration: int
    p_packet: float
    min_alloc: int
    path: Path
    minsep: int
    t_start: int
    t_expiry: int
    n_inst: int = 1
    service_epsilon: float = 1e-5

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("PGA duration must be positive")
        if not 0 < self.p_packet <= 1:
            raise ValueError("p_packet must lie in (0, 1]")
        if self.min_alloc < 1:
            raise ValueError("minimal allocation must be at least 1")
        if self.minsep < 0:
            raise ValueError("minsep must be non-negative")

    @property
    def resources(self) -> tuple[ComponentId, ...]:
        """Internal resources of the path (endpoints excluded)."""
        return self.path[1:-1]

    @property
    def sort_key(self) -> tuple[int, int]:
        return (self.min_alloc, self.pgt_id)

    @property
    def load(self) -> int:
        return self.min_alloc * (self.duration + self.minsep)

    def to_json(self) -> dict:
        return {
            "pgt_id": self.pgt_id,
            "demand_id": self.demand_id,
            "duration_ns": self.duration,
            "p_packet": self.p_packet,
            "min_alloc": self.min_alloc,
            "path": list(self.path),
            "minsep_ns": self.minsep,
            "t_start_ns": self.t_start,
            "t_expiry_ns": self.t_expiry,
            "n_inst": self.n_inst,
            "service_epsilon": self.service_epsilon,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PGT":
        return cls(
            pgt_id=int(data["pgt_id"]),
            demand_id=int(data["demand_id"]),
            duration=int(data["duration_ns"]),
            p_packet=float(data["p_packet"]),
            min_alloc=int(data["min_alloc"]),
            path=tuple(int(v) for v in data["path"]),
            minsep=int(data["minsep_ns"]),
            t_start=int(data["t_start_ns"]),
            t_expiry=int(data["t_expiry_ns"]),
            n_inst=int(data.get("n_inst", 1)),
            service_epsilon=float(data.get("service_epsilon", 1e-5)),
        )


# ---------------------------------------------------------------------------
# PGT creation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PGTCandidate:
    p_packet: float
    duration: int  # ns
    min_alloc: int

    def load(self, minsep: int) -> int:
        return self.min_alloc * (self.duration + minsep)


class NoViable(Exception):
    """No candidate success probability yields a schedulable task."""


def pick_candidate(candidates: Iterable[PGTCandidate], minsep: int) -> PGTCandidate:
    """Least-load candidate; ties go to the shorter PGA, then the lower probability."""
    best = min(candidates, key=lambda c: (c.load(minsep), c.duration, c.p_packet), default=None)
    if best is None:
        raise NoViable("no candidate")
    return best


def effective_attempt_period(rate: float, attempt_period: float | None) -> float:
    """Attempt spacing keeping the per-attempt success at or below one half."""
    base = DEFAULT_ATTEMPT_PERIOD if attempt_period is None else attempt_period
    return min(base, 0.5 / rate)


def intervals_until_expiry(t_start: int, t_expiry: int, T_SI: int) -> int:
    return max(1, -(-(t_expiry - t_start) // T_SI))


def pgt_candidates(
    demand: Demand,
    entry: CapabilityEntry,
    T_SI: int,
    t_start: int,
    attempt_period: float | None = None,
    p_grid: Sequence[float] = DEFAULT_P_GRID,
) -> list[PGTCandidate]:
    period = effective_attempt_period(entry.rate, attempt_period)
    n_si = intervals_until_expiry(t_start, to_ns(demand.expiry), T_SI)
    out = []
    for p in p_grid:
        seconds = duration_for_probability(
            p, entry.rate, demand.packet.window, demand.packet.pairs, period, max_duration=to_s(T_SI)
        )
        if seconds is None:
            continue
        duration = to_ns(seconds)
        if duration > T_SI:
            continue
        try:
            ell = minimal_allocation(p, demand.n_inst, n_si, demand.service_epsilon)
        except Unsatisfiable:
            continue
        out.append(PGTCandidate(p, duration, ell))
    return out


def create_pgt(
    demand: Demand,
    path: Path,
    entry: CapabilityEntry,
    T_SI: int,
    t_start: int,
    pgt_id: int,
    attempt_period: float | None = None,
    p_grid: Sequence[float] = DEFAULT_P_GRID,
) -> PGT:
    """Build the least-load PGT for ``demand`` on ``path``; raises NoViable."""
    minsep = to_ns(demand.minsep)
    cands = pgt_candidates(demand, entry, T_SI, t_start, attempt_period, p_grid)
    best = pick_candidate(cands, minsep)
    return PGT(
        pgt_id=pgt_id,
        demand_id=demand.demand_id,
        duration=best.duration,
        p_packet=best.p_packet,
        min_alloc=best.min_alloc,
        path=path,
        minsep=minsep,
        t_start=t_start,
        t_expiry=to_ns(demand.expiry),
        n_inst=demand.n_inst,
        service_epsilon=demand.service_epsilon,
    )


# ---------------------------------------------------------------------------
# registration
# ---------------------------------------------------------------------------


class FailReason(str, enum.Enum):
    STALE_CAPABILITIES = "StaleCapabilities"
    UNKNOWN_NODE = "UnknownNode"
    NO_PATH = "NoPath"
    MALFORMED = "Malformed"
    NON_POSITIVE_FIELD = "NonPositiveField"
    EXPIRY_BEFORE_START = "ExpiryBeforeStart"
    NO_VIABLE_PGT = "NoViablePGT"


class RejectReason(str, enum.Enum):
    SCHEDULER_REJECT = "SchedulerReject"


@dataclass(frozen=True)
class Registration:
    demand_id: int
    alternatives: tuple[PGT, ...] = ()
    reason: FailReason | None = None

    @property
    def passed(self) -> bool:
        return self.reason is None


def _is_int(value) -> bool:
    return isinstance(value, Integral) and not isinstance(value, bool)


def _is_num(value) -> bool:
    return isinstance(value, Real) and not isinstance(value, bool) and math.isfinite(float(value))


def metadata_check(
    demand: Demand, graph: ResourceGraph, table: CapabilitiesTable, t_start: int
) -> FailReason | None:
    meta = demand.metadata
    if not _is_int(meta.capability_version) or meta.capability_version != table.version:
        return FailReason.STALE_CAPABILITIES
    for node in (meta.src, meta.dst):
        if not _is_int(node) or graph.kinds.get(node) is not Kind.END_NODE:
            return FailReason.UNKNOWN_NODE
    if meta.src == meta.dst or not feasible_paths(table, meta.src, meta.dst, 0.0):
        return FailReason.NO_PATH
    pk = demand.packet
    if not (
        isinstance(pk, PacketSpec)
        and _is_num(pk.window)
        and _is_int(pk.pairs)
        and _is_num(pk.min_fidelity)
        and _is_num(demand.minsep)
        and _is_num(demand.expiry)
        and _is_int(demand.n_inst)
        and _is_num(demand.service_epsilon)
        and 0 < demand.service_epsilon < 1
        and pk.min_fidelity <= 1
    ):
        return FailReason.MALFORMED
    if min(pk.window, pk.pairs, pk.min_fidelity, demand.n_inst) <= 0 or demand.minsep < 0:
        return FailReason.NON_POSITIVE_FIELD
    if to_ns(demand.expiry) <= t_start:
        return FailReason.EXPIRY_BEFORE_START
    return None


def register_demand(
    demand: Demand,
    graph: ResourceGraph,
    table: CapabilitiesTable,
    t_start: int,
    T_SI: int,
    pgt_ids: Iterable[int] | None = None,
    attempt_period: float | None = None,
    p_grid: Sequence[float] = DEFAULT_P_GRID,
) -> Registration:
    """Metadata check, then one PGT per feasible path (fastest first), then sanity checks."""
    reason = metadata_check(demand, graph, table, t_start)
    if reason is not None:
        return Registration(demand.demand_id, reason=reason)
    ids = iter(pgt_ids) if pgt_ids is not None else itertools.count()
    meta = demand.metadata
    alternatives = []
    for path in feasible_paths(table, meta.src, meta.dst, demand.packet.min_fidelity):
        try:
            pgt = create_pgt(demand, path, table[path], T_SI, t_start, next(ids), attempt_period, p_grid)
        except NoViable:
            continue
        if pgt.duration <= T_SI:
            alternatives.append(pgt)
    if not alternatives:
        return Registration(demand.demand_id, reason=FailReason.NO_VIABLE_PGT)
    return Registration(demand.demand_id, tuple(alternatives))


# ---------------------------------------------------------------------------
# buffers
# ---------------------------------------------------------------------------


class TaskIntakeBuffer:
    """FIFO of per-demand alternative lists; at most one entry per demand."""

    def __init__(self) -> None:
        self._entries: deque[tuple[PGT, ...]] = deque()
        self._demands: set[int] = set()
        self._lock = threading.Lock()

    def push(self, alternatives: Sequence[PGT]) -> None:
        alts = tuple(alternatives)
        if not alts:
            raise ValueError("empty alternative list")
        demand_id = alts[0].demand_id
        if any(a.demand_id != demand_id for a in alts):
            raise ValueError("alternatives must share one demand")
        if len({a.path for a in alts}) != len(alts):
            raise ValueError("alternative paths must be distinct")
        with self._lock:
            if demand_id in self._demands:
                raise ValueError(f"demand {demand_id} already queued")
            self._demands.add(demand_id)
            self._entries.append(alts)

    def read_and_flush(self, limit: int | None = None) -> list[tuple[PGT, ...]]:
        with self._lock:
            count = len(self._entries) if limit is None else min(limit, len(self._entries))
            out = [self._entries.popleft() for _ in range(count)]
            for alts in out:
                self._demands.discard(alts[0].demand_id)
            return out

    def __len__(self) -> int:
        return len(self._entries)


class TerminationBuffer:
    def __init__(self) -> None:
        self._entries: set[int] = set()
        self._lock = threading.Lock()

    def push(self, pgt_id: int) -> None:
        with self._lock:
            self._entries.add(pgt_id)

    def read_and_flush(self) -> set[int]:
        with self._lock:
            out, self._entries = self._entries, set()
            return out

    def __len__(self) -> int:
        return len(self._entries)


def buffer_read_and_flush(intake: TaskIntakeBuffer, limit: int | None = None) -> list[tuple[PGT, ...]]:
    return intake.read_and_flush(limit)


# ---------------------------------------------------------------------------
# status ledger
# ---------------------------------------------------------------------------


class Status(str, enum.Enum):
    QUEUED = "Queued"
    REGISTERED = "Registered"
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"
    FAILED = "Failed"
    ACTIVE = "Active"
    SATISFIED = "Satisfied"
    EXPIRED = "Expired"
    TERMINATED = "Terminated"
    REMOVED = "Removed"


TRANSITIONS: dict[Status, frozenset[Status]] = {
    Status.QUEUED: frozenset({Status.REGISTERED, Status.FAILED}),
    Status.REGISTERED: frozenset({Status.ACCEPTED, Status.REJECTED}),
    Status.ACCEPTED: frozenset({Status.ACTIVE}),
    Status.ACTIVE: frozenset({Status.SATISFIED, Status.EXPIRED, Status.TERMINATED, Status.REMOVED}),
}

FINAL = frozenset({Status.REJECTED, Status.FAILED, Status.SATISFIED, Status.EXPIRED, Status.TERMINATED, Status.REMOVED})


class IllegalTransition(RuntimeError):
    pass


@dataclass(frozen=True)
class ServiceAgreement:
    pgt_id: int
    min_alloc: int
    t_start: int
    t_expiry: int
    service_epsilon: float

    @classmethod
    def from_pgt(cls, pgt: PGT) -> "ServiceAgreement":
        return cls(pgt.pgt_id, pgt.min_alloc, pgt.t_start, pgt.t_expiry, pgt.service_epsilon)


@dataclass
class LedgerEntry:
    status: Status
    reason: str | None = None
    agreement: ServiceAgreement | None = None


@dataclass
class DemandStatusLedger:
    statuses: dict[int, LedgerEntry] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._lock = threading.Lock()

    def enqueue(self, demand_id: int) -> None:
        with self._lock:
            if demand_id in self.statuses:
                raise IllegalTransition(f"demand {demand_id} already in ledger")
            self.statuses[demand_id] = LedgerEntry(Status.QUEUED)

    def status(self, demand_id: int) -> Status:
        return self.statuses[demand_id].status

    def move(self, demand_id: int, new: Status, reason: str | None = None) -> LedgerEntry:
        with self._lock:
            entry = self.statuses.get(demand_id)
            if entry is None:
                raise IllegalTransition(f"unknown demand {demand_id}")
            if new not in TRANSITIONS.get(entry.status, frozenset()):
                raise IllegalTransition(f"{demand_id}: {entry.status.value} -> {new.value}")
            entry.status = new
            entry.reason = reason
            return entry

    def rehome(self, demand_id: int, pgt: PGT) -> None:
        """Update the agreement of an active demand re-admitted on another path."""
        with self._lock:
            entry = self.statuses[demand_id]
            if entry.status is not Status.ACTIVE:
                raise IllegalTransition(f"{demand_id}: re-home requires Active, not {entry.status.value}")
            entry.agreement = ServiceAgreement.from_pgt(pgt)


@dataclass(frozen=True)
class Accept:
    pgt: PGT


@dataclass(frozen=True)
class Reject:
    reason: RejectReason = RejectReason.SCHEDULER_REJECT


def apply_decision(ledger: DemandStatusLedger, demand_id: int, decision: Accept | Reject) -> dict:
    """Record an admission decision; returns the status message sent to the end node."""
    if ledger.status(demand_id) is not Status.REGISTERED:
        raise IllegalTransition(f"{demand_id} is {ledger.status(demand_id).value}, not Registered")
    if isinstance(decision, Accept):
        entry = ledger.move(demand_id, Status.ACCEPTED)
        entry.agreement = ServiceAgreement.from_pgt(decision.pgt)
        return {"demand_id": demand_id, "event": "accepted", "agreement": entry.agreement}
    ledger.move(demand_id, Status.REJECTED, decision.reason.value)
    return {"demand_id": demand_id, "event": "rejected", "reason": decision.reason.value}


# ---------------------------------------------------------------------------
# manager
# ---------------------------------------------------------------------------


@dataclass
class DemandManager:
    """Single-worker registration feeding the scheduler's buffers."""

    T_SI: int
    attempt_period: float | None = None
    p_grid: Sequence[float] = DEFAULT_P_GRID
    ledger: DemandStatusLedger = field(default_factory=DemandStatusLedger)
    intake: TaskIntakeBuffer = field(default_factory=TaskIntakeBuffer)
    terminations: TerminationBuffer = field(default_factory=TerminationBuffer)
    _pgt_ids: "itertools.count[int]" = field(default_factory=itertools.count)

    def submit(
        self, demand: Demand, graph: ResourceGraph, table: CapabilitiesTable, t_start: int
    ) -> Registration:
        self.ledger.enqueue(demand.demand_id)
        result = register_demand(
            demand, graph, table, t_start, self.T_SI, self._pgt_ids, self.attempt_period, self.p_grid
        )
        if result.passed:
            self.ledger.move(demand.demand_id, Status.REGISTERED)
            self.intake.push(result.alternatives)
        else:
            self.ledger.move(demand.demand_id, Status.FAILED, result.reason.value)
        return result

    def terminate(self, pgt_id: int) -> None:
        self.terminations.push(pgt_id)

