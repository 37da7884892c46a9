import numpy as np
from hypothesis import given, strategies as st
from oracles import random_small_pgts

from qnetsched.demand import PGT
from qnetsched.network import Network, dumbbell
from qnetsched.schedule import CompiledSchedule, NetworkSchedule, ScheduleStore, Timeline, compile_schedule
from qnetsched.scheduler import FillingClassSet, admit_tasks, compute_schedule

NET = Network.from_graph(dumbbell())


def task(pgt_id, path, duration=3, minsep=0):
    return PGT(pgt_id, pgt_id + 100, duration, 0.5, 1, path, minsep, 0, 10**6)


def test_timeline_queries():
    tl = Timeline()
    for start, end in [(10, 12), (0, 3), (5, 7)]:
        tl.add(start, end, owner=start)
    assert tl.starts == [0, 5, 10] and tl.owners == [0, 5, 10]
    assert tl.busy_at(0) and not tl.busy_at(3) and tl.busy_at(11)
    assert tl.free(3, 5) and not tl.free(2, 4) and tl.free(12, 20)
    assert tl.next_end_after(3) == 7 and tl.next_end_after(12) is None
    assert tl.last_end() == 12 and len(tl) == 3


def test_pga_replicated_on_every_internal_resource():
    schedule = NetworkSchedule(100)
    schedule.register(task(1, (10, 1, 4, 2, 15)))
    schedule.add_pga(1, 5)
    export = schedule.export()
    assert sorted(export) == [1, 2, 4]
    assert {(p.start, p.end) for pgas in export.values() for p in pgas} == {(5, 8)}
    assert schedule.minimal_pgas == 1 and schedule.bonus_pgas == 0


def test_compile_empty_schedule():
    compiled = compile_schedule(NetworkSchedule(100, interval_index=4, version=2))
    assert dict(compiled.per_component) == {}
    assert compiled.to_jsonl() == ""
    assert CompiledSchedule.from_jsonl("").per_component == {}


def test_compile_includes_end_nodes():
    schedule = NetworkSchedule(100)
    schedule.register(task(1, (10, 1, 4, 2, 15)))
    schedule.add_pga(1, 0)
    compiled = compile_schedule(schedule)
    assert sorted(compiled.per_component) == [1, 2, 4, 10, 15]
    for comp in (1, 2, 4, 10, 15):
        assert compiled[comp] == ({"pgt_id": 1, "demand_id": 101, "start": 0, "end": 3},)
    assert compiled[99] == ()
    assert set(compiled.pga_lists({1, 2, 4})) == {1, 2, 4}


@given(st.integers(0, 10**6), st.integers(0, 20))
def test_jsonl_round_trip(seed, count):
    tasks = random_small_pgts(NET.partition.paths, count, np.random.default_rng(seed))
    classes, _, _ = admit_tasks([[t] for t in tasks], FillingClassSet.empty(NET.partition), 90)
    compiled = compile_schedule(compute_schedule(classes, 90, interval_index=seed % 7, version=3))
    again = CompiledSchedule.from_jsonl(compiled.to_jsonl())
    assert again.per_component == compiled.per_component
    if compiled.per_component:
        assert (again.interval_index, again.version) == (seed % 7, 3)


def test_store_latest_version_and_pruning():
    store = ScheduleStore()
    for interval, version in [(1, 0), (1, 2), (2, 0)]:
        schedule = NetworkSchedule(100, interval, version)
        schedule.register(task(version, (10, 1, 11)))
        schedule.add_pga(version, 0)
        store.put(compile_schedule(schedule))
    assert store.get(1).version == 2
    assert store.get(1, version=0).version == 0
    assert store.get(3) is None
    assert store.for_component(1, 10)[0]["pgt_id"] == 2
    assert store.for_component(5, 10) == ()
    store.drop_before(2)
    assert [c.interval_index for c in store] == [2]
