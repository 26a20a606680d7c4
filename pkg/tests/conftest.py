from __future__ import annotations

import pytest

from jobmover.cluster import ClusterState, JobSpec
from jobmover.config import SimConfig
from jobmover.workload import WorkloadSpec

HOUR = 3600

# results of the acceptance criteria, printed at the end of the session
ACCEPTANCE: list[str] = []


def blocking_trace(horizon: int, stream: int = 0) -> list[JobSpec]:
    """A and C never finish, D frees one core at 2 h, E needs two cores.

    With best-fit, A and D share server 0 and C sits alone on server 1, so
    after D completes each server has one free core and E is stuck at the
    head of the queue. ``stream`` more 2-core one-hour jobs queue behind E.
    """
    long_run = 2 * horizon
    jobs = [
        JobSpec(0, 0, 1, long_run),      # A
        JobSpec(1, 0, 1, 2 * HOUR),      # D
        JobSpec(2, 0, 1, long_run),      # C
        JobSpec(3, 0, 2, HOUR),          # E
    ]
    jobs += [JobSpec(4 + i, 0, 2, HOUR) for i in range(stream)]
    return jobs


def blocking_config(horizon: int, **changes) -> SimConfig:
    base = SimConfig(num_servers=2, cores_per_server=2, horizon=horizon, mover_interval=HOUR,
                     migration_downtime=60, baseline_placement="best-fit",
                     workload=WorkloadSpec(kind="trace", trace_path="-"))
    return base.replace(**changes)


def build_layout(layout: list[list[int]], cores_per_server: int, *, clock: int = 0,
                 pinned: set[int] = frozenset(), cooldown: int = HOUR) -> ClusterState:
    """Cluster with ``layout[s]`` listing the core counts running on server ``s``.

    Job ids are handed out in layout order. Jobs in ``pinned`` look freshly
    migrated so the mover must leave them alone.
    """
    st = ClusterState(len(layout), cores_per_server)
    jid = 0
    for srv, jobs in enumerate(layout):
        for cores in jobs:
            st.enqueue(JobSpec(jid, 0, cores, 10 ** 9))
            st.place(jid, srv)
            jid += 1
    st.clock = clock
    for j in pinned:
        st.jobs[j].last_migration_time = clock - cooldown + 1
    return st


@pytest.fixture
def blocking():
    return blocking_trace, blocking_config


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
