from qnetsched.demand import PGT
from qnetsched.schedule import PGA
from qnetsched.validate import validate_schedule

PATH = (10, 1, 4, 2, 15)


def task(pgt_id, duration=2, minsep=3, min_alloc=2, path=PATH):
    return PGT(pgt_id, pgt_id, duration, 0.5, min_alloc, path, minsep, 0, 10**6)


def aligned(pgt_id, start, end, path=PATH):
    return {r: [PGA(pgt_id, pgt_id, start, end, r)] for r in path[1:-1]}


def merge(*parts):
    out: dict = {}
    for part in parts:
        for r, pgas in part.items():
            out.setdefault(r, []).extend(pgas)
    return out


def test_clean_schedule_is_ok():
    report = validate_schedule(merge(aligned(1, 0, 2), aligned(1, 5, 7)), [task(1)], 10)
    assert report.ok and report.valid
    assert report.summary()["max_end_ns"] == 7


def test_overlap_by_one_is_one_conflict_per_resource():
    a = task(1, path=(10, 1, 11), min_alloc=1)
    b = task(2, path=(12, 1, 13), min_alloc=1)
    per = merge(aligned(1, 0, 2, a.path), aligned(2, 1, 3, b.path))
    report = validate_schedule(per, [a, b], 10)
    assert len(report.conflicts) == 1 and not report.valid


def test_minsep_minus_one_is_one_violation():
    report = validate_schedule(merge(aligned(1, 0, 2), aligned(1, 4, 6)), [task(1)], 10)
    assert report.minsep_violations == [(1, 2, 4)]
    assert not report.valid


def test_shortfall_and_optional_minimal_check():
    per = aligned(1, 0, 2)
    report = validate_schedule(per, [task(1)], 10)
    assert report.valid and not report.ok
    assert report.shortfalls == [(1, 1, 2)]
    assert validate_schedule(per, [task(1)], 10, require_minimal=False).ok


def test_overrun_and_bad_duration_and_unknown():
    per = merge(aligned(1, 9, 11), aligned(7, 0, 1))
    report = validate_schedule(per, [task(1, min_alloc=1)], 10)
    assert [p.start for p in report.overruns if p.pgt_id == 1] == [9, 9, 9]
    assert report.unknown == [7]
    per = aligned(1, 0, 3)
    assert len(validate_schedule(per, [task(1, min_alloc=1)], 10).bad_duration) == 3


def test_misaligned_when_a_resource_is_missing():
    per = aligned(1, 0, 2)
    del per[4]
    report = validate_schedule(per, [task(1, min_alloc=1)], 10)
    assert report.misaligned == [1]
    shifted = aligned(1, 0, 2)
    shifted[2] = [PGA(1, 1, 5, 7, 2)]
    assert validate_schedule(shifted, [task(1, min_alloc=1)], 10).misaligned == [1]


def test_summary_counts():
    report = validate_schedule({}, [task(1)], 10)
    summary = report.summary()
    assert summary["shortfalls"] == 1 and summary["valid"] is True
    assert summary["minimal_allocations_met"] is False
