"""Complexity benchmarks for admission and schedule computation.

Timings use ``time.perf_counter`` around the operation only; inputs are
built beforehand and the first ``warmup`` repeats of every point are
discarded.
"""

from __future__ import annotations

import csv
import gc
import io
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .demand import PGT, to_ns
from .network import Kind, Network, PathPartition, ResourceGraph, dumbbell
from .scheduler import FillingClassSet, PhaseTimes, admit_tasks, compute_schedule

PHASES = ("admit", "minimal", "bonus", "total")


@dataclass(frozen=True)
class BenchmarkPoint:
    phase: str
    size: int
    mean_seconds: float
    std_seconds: float
    repeats: int

    def __post_init__(self) -> None:
        if self.phase not in PHASES:
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.repeats < 1 or self.std_seconds < 0:
            raise ValueError("need repeats >= 1 and std >= 0")


@dataclass(frozen=True)
class PolyFit:
    degree: int
    coefficients: tuple[float, ...]  # highest power first, as numpy.polyfit
    r_squared: float
    log_slope: float  # least-squares slope of log(time) against log(size)

    def __call__(self, size: float | np.ndarray) -> np.ndarray:
        return np.polyval(self.coefficients, size)


def fit_polynomial(xs: Sequence[float], ys: Sequence[float], degree: int) -> PolyFit:
    sizes = np.asarray(xs, dtype=float)
    times = np.asarray(ys, dtype=float)
    coeffs = np.polyfit(sizes, times, degree)
    resid = times - np.polyval(coeffs, sizes)
    total = float(np.sum((times - times.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / total if total > 0 else 1.0
    keep = (sizes > 0) & (times > 0)
    slope = float(np.polyfit(np.log(sizes[keep]), np.log(times[keep]), 1)[0]) if keep.sum() >= 2 else float("nan")
    return PolyFit(degree, tuple(float(c) for c in coeffs), r2, slope)


def _fit_summary(fit: PolyFit | None) -> dict | None:
    if fit is None:
        return None
    return {"degree": fit.degree, "r_squared": fit.r_squared, "log_slope": fit.log_slope}


@contextmanager
def no_gc():
    """Keep collector pauses out of measured sections."""
    enabled = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


def time_repeats(
    run: Callable[[object], object], setup: Callable[[], object], repeats: int, warmup: int = 3
) -> list[float]:
    """Fresh input from ``setup`` per call; returns the kept durations."""
    kept: list[float] = []
    for i in range(warmup + repeats):
        arg = setup()
        with no_gc():
            start = time.perf_counter()
            run(arg)
            elapsed = time.perf_counter() - start
        if i >= warmup:
            kept.append(elapsed)
    return kept


def _point(phase: str, size: int, samples: Sequence[float]) -> BenchmarkPoint:
    arr = np.asarray(samples)
    return BenchmarkPoint(phase, int(size), float(arr.mean()), float(arr.std()), len(arr))


def points_to_csv(points: Iterable[BenchmarkPoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["phase", "size", "mean_s", "std_s", "repeats"])
    for p in points:
        writer.writerow([p.phase, p.size, f"{p.mean_seconds:.9f}", f"{p.std_seconds:.9f}", p.repeats])
    return buf.getvalue()


def points_from_csv(text: str) -> list[BenchmarkPoint]:
    rows = csv.DictReader(io.StringIO(text))
    return [
        BenchmarkPoint(r["phase"], int(r["size"]), float(r["mean_s"]), float(r["std_s"]), int(r["repeats"]))
        for r in rows
    ]


# ---------------------------------------------------------------------------
# admission
# ---------------------------------------------------------------------------

ADMIT_T_SI = to_ns(1e7)  # roomy enough that every generated task fits


def random_pgts(
    partition: PathPartition, count: int, rng: np.random.Generator, first_id: int = 0
) -> list[PGT]:
    paths = partition.paths
    out = []
    for i in range(count):
        path = paths[int(rng.integers(len(paths)))]
        out.append(
            PGT(
                pgt_id=first_id + i,
                demand_id=first_id + i,
                duration=to_ns(rng.uniform(0.1, 2.0)),
                p_packet=float(rng.uniform(0.05, 0.95)),
                min_alloc=int(rng.integers(1, 21)),
                path=path,
                minsep=to_ns(rng.uniform(0.0, 5.0)),
                t_start=0,
                t_expiry=ADMIT_T_SI * 10,
            )
        )
    return out


@dataclass
class AdmitCase:
    classes: FillingClassSet
    intake: list[list[PGT]]


def admit_case(partition: PathPartition, active: int, incoming: int, rng: np.random.Generator) -> AdmitCase:
    """``active`` PGTs already admitted plus ``incoming`` single-alternative entries."""
    existing = random_pgts(partition, active, rng)
    classes, accepted, _ = admit_tasks([[t] for t in existing], FillingClassSet.empty(partition), ADMIT_T_SI)
    assert len(accepted) == active
    intake = [[t] for t in random_pgts(partition, incoming, rng, first_id=active)]
    return AdmitCase(classes, intake)


@dataclass
class AdmitBenchmark:
    by_k: list[BenchmarkPoint]  # fixed N
    by_n: list[BenchmarkPoint]  # fixed k
    fixed_n: int
    fixed_k: int
    fit_k: PolyFit | None
    fit_n: PolyFit | None

    @property
    def points(self) -> list[BenchmarkPoint]:
        return self.by_k + self.by_n

    def report(self) -> dict:
        return {
            "fixed_n": self.fixed_n,
            "fixed_k": self.fixed_k,
            "fit_k": _fit_summary(self.fit_k),
            "fit_n": _fit_summary(self.fit_n),
        }


def bench_admit(
    n_values: Sequence[int],
    k_values: Sequence[int],
    repeats: int = 5,
    seed: int = 0,
    warmup: int = 3,
    fixed_n: int | None = None,
    fixed_k: int | None = None,
    graph: ResourceGraph | None = None,
) -> AdmitBenchmark:
    """Time ``admit_tasks`` sweeping k at fixed N and N at fixed k.

    Fits are cubic in k and quadratic in N.
    """
    partition = Network.from_graph(graph or dumbbell()).partition
    rng = np.random.default_rng(seed)
    fixed_n = max(n_values) if fixed_n is None else fixed_n
    fixed_k = max(k_values) if fixed_k is None else fixed_k

    def run(case: AdmitCase) -> None:
        admit_tasks(case.intake, case.classes, ADMIT_T_SI)

    by_k = [
        _point("admit", k, time_repeats(run, lambda k=k: admit_case(partition, fixed_n, k, rng), repeats, warmup))
        for k in k_values
    ]
    by_n = [
        _point("admit", n, time_repeats(run, lambda n=n: admit_case(partition, n, fixed_k, rng), repeats, warmup))
        for n in n_values
    ]
    fit_k = fit_polynomial([p.size for p in by_k], [p.mean_seconds for p in by_k], 3) if len(by_k) > 3 else None
    fit_n = fit_polynomial([p.size for p in by_n], [p.mean_seconds for p in by_n], 2) if len(by_n) > 2 else None
    return AdmitBenchmark(by_k, by_n, fixed_n, fixed_k, fit_k, fit_n)


# ---------------------------------------------------------------------------
# schedule computation stress set
# ---------------------------------------------------------------------------

STRESS_T_SI = to_ns(8000)
STRESS_DURATION = to_ns(1)
STRESS_LEAD_MINSEP = to_ns(200)
STRESS_MIN_ALLOC = 20


def single_link_network() -> Network:
    """Two end nodes behind one EGI: a single path and a single class."""
    graph = ResourceGraph.build({1: Kind.EGI, 2: Kind.END_NODE, 3: Kind.END_NODE}, [(2, 1), (3, 1)])
    return Network.from_graph(graph)


def stress_set(count: int, network: Network | None = None) -> FillingClassSet:
    """``count`` PGTs on one path: 1 s attempts, 20 per interval, only the first with a 200 s minsep."""
    network = network or single_link_network()
    path = network.partition.paths[0]
    tasks = [
        PGT(
            pgt_id=i,
            demand_id=i,
            duration=STRESS_DURATION,
            p_packet=0.5,
            min_alloc=STRESS_MIN_ALLOC,
            path=path,
            minsep=STRESS_LEAD_MINSEP if i == 0 else 0,
            t_start=0,
            t_expiry=STRESS_T_SI * 10,
        )
        for i in range(count)
    ]
    classes, accepted, _ = admit_tasks([[t] for t in tasks], FillingClassSet.empty(network.partition), STRESS_T_SI)
    if len(accepted) != count:
        raise ValueError(f"stress set of {count} does not fit the interval")
    return classes


@dataclass
class ScheduleBenchmark:
    points: list[BenchmarkPoint]
    bonus_pgas: dict[int, int]
    fit_minimal: PolyFit | None
    fit_total: PolyFit | None
    bonus_peak: float  # N at the maximum of a quadratic fitted to the upper part of the bonus curve
    bonus_peak_raw: int  # N with the largest mean bonus time
    zero_bonus_from: int | None  # smallest N from which no bonus PGA is added

    def series(self, phase: str) -> list[BenchmarkPoint]:
        return [p for p in self.points if p.phase == phase]

    def report(self) -> dict:
        return {
            "minimal_fit": _fit_summary(self.fit_minimal),
            "total_fit": _fit_summary(self.fit_total),
            "bonus_peak": self.bonus_peak,
            "bonus_peak_raw": self.bonus_peak_raw,
            "zero_bonus_from": self.zero_bonus_from,
            "bonus_pgas": {str(k): v for k, v in sorted(self.bonus_pgas.items())},
        }


def locate_peak(xs: Sequence[float], ys: Sequence[float], level: float = 0.8) -> float:
    """Vertex of a quadratic fitted to the points within ``level`` of the maximum.

    Falls back to the raw argmax when the fit is not concave.
    """
    sizes = np.asarray(xs, dtype=float)
    values = np.asarray(ys, dtype=float)
    top = int(np.argmax(values))
    keep = values >= level * values[top]
    if keep.sum() < 3:
        return float(sizes[top])
    curvature, slope, _ = np.polyfit(sizes[keep], values[keep], 2)
    if curvature >= 0:
        return float(sizes[top])
    return float(-slope / (2 * curvature))


def bench_schedule(
    n_values: Sequence[int] = tuple(range(5, 401, 5)),
    repeats: int = 3,
    warmup: int = 3,
    minimal_repeats: int = 20,
) -> ScheduleBenchmark:
    """Sweep the stress set.

    The minimal phase is cheap and noisy, so it gets ``minimal_repeats``
    extra bonus-free runs per point on top of the full runs.
    """
    network = single_link_network()
    samples: dict[str, dict[int, list[float]]] = {ph: {} for ph in ("minimal", "bonus", "total")}
    bonus_pgas: dict[int, int] = {}
    for n in n_values:
        classes = stress_set(n, network)
        for i in range(warmup + repeats):
            times = PhaseTimes()
            with no_gc():
                schedule = compute_schedule(classes, STRESS_T_SI, bonus=True, times=times)
            if i < warmup:
                continue
            samples["minimal"].setdefault(n, []).append(times.minimal)
            samples["bonus"].setdefault(n, []).append(times.bonus)
            samples["total"].setdefault(n, []).append(times.minimal + times.bonus)
        for _ in range(minimal_repeats):
            times = PhaseTimes()
            with no_gc():
                compute_schedule(classes, STRESS_T_SI, bonus=False, times=times)
            samples["minimal"][n].append(times.minimal)
        bonus_pgas[n] = schedule.bonus_pgas
    points = [_point(ph, n, samples[ph][n]) for ph in ("minimal", "bonus", "total") for n in n_values]
    xs = list(n_values)
    minimal = [np.mean(samples["minimal"][n]) for n in xs]
    bonus = [np.mean(samples["bonus"][n]) for n in xs]
    total = [np.mean(samples["total"][n]) for n in xs]
    zero_from = None
    for n in reversed(xs):
        if bonus_pgas[n] != 0:
            break
        zero_from = n
    return ScheduleBenchmark(
        points,
        bonus_pgas,
        fit_polynomial(xs, minimal, 2) if len(xs) > 2 else None,
        fit_polynomial(xs, total, 3) if len(xs) > 3 else None,
        locate_peak(xs, bonus),
        int(xs[int(np.argmax(bonus))]),
        zero_from,
    )
