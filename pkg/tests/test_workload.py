import pytest
from hypothesis import given, strategies as st

from jobmover.cluster import JobSpec
from jobmover.workload import (DAY, HOUR, TraceError, WorkloadSpec, gen_random, gen_worstcase, generate,
                               load_trace, parse_trace, save_trace)


def test_random_deterministic():
    spec = WorkloadSpec()
    assert gen_random(spec, 7, 30 * DAY, 8, 4) == gen_random(spec, 7, 30 * DAY, 8, 4)
    assert gen_random(spec, 7, 30 * DAY, 8, 4) != gen_random(spec, 8, 30 * DAY, 8, 4)


def test_degenerate_core_range():
    jobs = gen_random(WorkloadSpec(cores_min=8, cores_max=8), 0, 10 * DAY, 8, 2)
    assert jobs and all(j.cores == 8 for j in jobs)


def test_random_ranges_and_saturation():
    spec = WorkloadSpec()
    horizon, n, c = 60 * DAY, 4, 8
    jobs = gen_random(spec, 1, horizon, c, n)
    assert all(1 <= j.cores <= c and HOUR <= j.runtime <= 15 * DAY for j in jobs)
    assert all(j.submit_time == 0 for j in jobs)
    assert sum(j.cores * j.runtime for j in jobs) > n * c * horizon


def test_interval_arrivals():
    spec = WorkloadSpec(arrival="interval", mean_interarrival=600.0)
    jobs = gen_random(spec, 3, DAY, 8)
    times = [j.submit_time for j in jobs]
    assert times == sorted(times) and times[-1] <= DAY
    assert 100 < len(jobs) < 200


def test_worstcase_construction():
    spec = WorkloadSpec(kind="worstcase", monos_per_cycle=2, fullcores_per_cycle=1)
    jobs = gen_worstcase(spec, HOUR, 2, 2)
    assert [(j.cores, j.runtime) for j in jobs] == [(1, 15 * DAY), (1, 15 * DAY), (2, HOUR)]


def test_worstcase_cadence():
    jobs = gen_worstcase(WorkloadSpec(kind="worstcase"), 7200, 2, 2)
    assert sorted({j.submit_time for j in jobs}) == [0, 1, 3600, 3601]


def test_worstcase_defaults_scale_with_farm():
    jobs = gen_worstcase(WorkloadSpec(kind="worstcase"), HOUR, 10, 8)
    assert [j.cores for j in jobs] == [1] * 10 + [8] * 10


def test_trace_round_trip(tmp_path):
    jobs = gen_random(WorkloadSpec(), 5, 5 * DAY, 8, 2)
    path = tmp_path / "t.trace"
    save_trace(jobs, path)
    assert load_trace(path) == jobs


def test_parse_error_names_line():
    with pytest.raises(TraceError, match=":2:"):
        parse_trace("0 1 100 0\nx 3 100 0\n", "f")


def test_submit_times_must_not_go_backwards():
    with pytest.raises(TraceError, match=":2:"):
        parse_trace("10 1 100 0\n5 1 100 0\n")


def test_empty_trace():
    assert parse_trace("") == []


def test_bad_specs():
    with pytest.raises(ValueError):
        WorkloadSpec(cores_max=9).validate(8)
    with pytest.raises(ValueError):
        WorkloadSpec(kind="sequential").validate(8)
    with pytest.raises(ValueError):
        WorkloadSpec(arrival="interval").validate(8)
    with pytest.raises(ValueError):
        generate(WorkloadSpec(runtime_min=10, runtime_max=5), 0, DAY, 1, 8)


@given(st.lists(st.tuples(st.integers(0, 10 ** 6), st.integers(1, 64), st.integers(1, 10 ** 7),
                          st.integers(-5, 5)), max_size=30))
def test_parse_round_trip_property(rows):
    rows = sorted(rows)
    text = "".join(f"{t} {c} {r} {p}\n" for t, c, r, p in rows)
    jobs = parse_trace(text)
    assert jobs == [JobSpec(i, t, c, r, p) for i, (t, c, r, p) in enumerate(rows)]
