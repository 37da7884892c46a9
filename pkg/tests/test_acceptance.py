"""End-to-end acceptance checks; each prints one PASS/FAIL line.

The long scenario runs are shared through module fixtures, so the whole
file takes several minutes on one core.
"""

import math
import time

import numpy as np
import pytest
from oracles import optimal_sequential_span, straight_line_required_time

from qnetsched.bench import bench_admit, bench_schedule
from qnetsched.demand import PGT
from qnetsched.experiments import EPSILONS, RANDOM_TOPOLOGY_ROWS, SMALL_ROWS, dumbbell_reliability, random_sweep
from qnetsched.scheduler import calculate_required_time
from qnetsched.stats import Unsatisfiable, binomial_shortfall, minimal_allocation

pytestmark = pytest.mark.acceptance

LINES: list[str] = []


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)


@pytest.fixture(scope="module")
def dumbbell_cell():
    return dumbbell_reliability(seeds=20, intervals=200)


@pytest.fixture(scope="module")
def sweep_cells():
    return random_sweep(SMALL_ROWS, EPSILONS, bonus_modes=(True, False), seeds=5, intervals=150)


@pytest.fixture(scope="module")
def budget_cells():
    return random_sweep(RANDOM_TOPOLOGY_ROWS, EPSILONS[:1], seeds=2, intervals=50)


def enabled(cells):
    return [c for c in cells if c.bonus_enabled]


def test_criterion_01_dumbbell_reliability(dumbbell_cell):
    s = dumbbell_cell.summary
    ok = s["minimal_service_proportion"] == 1.0 and s["demands_finished"] > 0 and dumbbell_cell.wall_seconds <= 300
    report(1, ok, f"minimal service {s['minimal_service_proportion']} over {s['demands_finished']} finished demands, "
                  f"{dumbbell_cell.wall_seconds:.0f} s")
    assert ok


def test_criterion_02_epsilon_sweep(sweep_cells):
    cells = enabled(sweep_cells)
    wall = sum(c.wall_seconds for c in sweep_cells)
    worst = []
    ok = wall <= 900
    for c in cells:
        prop = c.summary["minimal_service_proportion"]
        floor = max(1 - c.epsilon, 0.995) if c.epsilon == 0.5 else 1 - c.epsilon
        worst.append(f"{c.label}@{c.epsilon:g}={prop:.4f}")
        ok &= prop is not None and prop >= floor
    report(2, ok, f"{len(cells)} cells, {wall:.0f} s: " + " ".join(worst))
    assert ok


def test_criterion_03_bonus_effect(sweep_cells):
    on = {(c.label, c.epsilon): c.summary for c in sweep_cells if c.bonus_enabled}
    off = {(c.label, c.epsilon): c.summary for c in sweep_cells if not c.bonus_enabled}
    ratios = {k: off[k]["mean_service_to_expiry"] / on[k]["mean_service_to_expiry"] for k in on}
    bonus = {k: s["bonus_proportion"] for k, s in on.items()}
    ok = min(ratios.values()) >= 1.5 and all(0.35 <= b <= 0.65 for b in bonus.values())
    report(3, ok, f"service-to-expiry ratio min {min(ratios.values()):.2f}, "
                  f"bonus proportion {min(bonus.values()):.3f}..{max(bonus.values()):.3f}")
    assert ok


def test_criterion_04_invariants(dumbbell_cell, sweep_cells, budget_cells):
    cells = [dumbbell_cell, *sweep_cells, *budget_cells]
    violations = sum(c.summary["invariant_violations"] for c in cells)
    intervals = sum(c.summary["intervals"] for c in cells)
    report(4, violations == 0, f"{violations} violations over {intervals} checked intervals")
    assert violations == 0


def test_criterion_05_required_time_oracle():
    rng = np.random.default_rng(20240501)
    start = time.perf_counter()
    failures = 0
    for case in range(500):
        size = int(rng.integers(1, 5))
        tasks = sorted(
            (
                PGT(i, i, int(rng.integers(1, 6)), 0.5, int(rng.integers(1, 4)), (10, 1, 11), int(rng.integers(0, 6)), 0, 1)
                for i in range(size)
            ),
            key=lambda t: t.sort_key,
        )
        bound = calculate_required_time(tasks)
        optimum = optimal_sequential_span(
            [t.duration for t in tasks], [t.minsep for t in tasks], [t.min_alloc for t in tasks]
        )
        failures += optimum > bound or bound != straight_line_required_time(tasks)
    wall = time.perf_counter() - start
    ok = failures == 0 and wall <= 120
    report(5, ok, f"500 classes, {failures} bound failures, {wall:.1f} s")
    assert ok


def test_criterion_06_allocation_certification():
    rng = np.random.default_rng(7)
    failures = 0
    for _ in range(1000):
        p = float(rng.uniform(0.01, 0.99))
        n_inst = int(rng.integers(1, 5001))
        n_si = int(rng.integers(1, 51))
        eps = float(10 ** rng.uniform(-6, math.log10(0.5)))
        try:
            ell = minimal_allocation(p, n_inst, n_si, eps)
        except Unsatisfiable:
            failures += 1
            continue
        failures += not binomial_shortfall(ell * n_si, p, n_inst) < eps
    report(6, failures == 0, f"1000 tuples, {failures} uncertified")
    assert failures == 0


def test_criterion_07_admit_performance():
    k_values = [1, 100, 250, 400, 550, 700, 850, 1000]
    result = bench_admit([1000], k_values, repeats=3, warmup=1, fixed_n=1000, fixed_k=1000)
    at_full = next(p for p in result.by_k if p.size == 1000).mean_seconds
    r2 = result.fit_k.r_squared
    ok = at_full < 7.0 and r2 >= 0.9
    report(7, ok, f"k=N=1000 mean {at_full:.3f} s, cubic R^2 {r2:.3f}")
    assert ok


def test_criterion_08_schedule_complexity():
    result = bench_schedule(range(5, 401, 5), repeats=2, warmup=1, minimal_repeats=20)
    ok = (
        result.fit_minimal.r_squared >= 0.9
        and abs(result.bonus_peak - 200) <= 10
        and result.bonus_pgas[400] == 0
        and result.fit_total.r_squared >= 0.9
    )
    report(8, ok, f"minimal R^2 {result.fit_minimal.r_squared:.3f}, bonus peak {result.bonus_peak:.1f} "
                  f"(raw {result.bonus_peak_raw}), bonus PGAs at 400: {result.bonus_pgas[400]}, "
                  f"total R^2 {result.fit_total.r_squared:.3f}")
    assert ok


def test_criterion_09_compute_budget(budget_cells):
    worst = max(c.summary["timing"]["t_total"]["max"] for c in budget_cells)
    ok = worst < 1.0 and len(budget_cells) == len(RANDOM_TOPOLOGY_ROWS)
    report(9, ok, f"{len(budget_cells)} topologies, slowest interval {worst:.3f} s")
    assert ok


def test_criterion_10_acceptance_band(sweep_cells):
    props = [c.summary["acceptance_proportion"] for c in enabled(sweep_cells)]
    ok = all(p is not None and 0.02 <= p <= 0.35 for p in props)
    report(10, ok, f"acceptance proportion {min(props):.3f}..{max(props):.3f}")
    assert ok
