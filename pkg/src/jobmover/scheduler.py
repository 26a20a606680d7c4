"""Baseline batch-queue behaviour: strict head-of-line FIFO with best-fit placement.

There is no backfill. If the job at the head of the queue cannot start, every
job behind it waits too.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping

from .cluster import ClusterState, JobRecord, JobSpec, Power, queue_key


def queue_order(queue: Iterable[int], jobs: Mapping[int, JobRecord | JobSpec]) -> list[int]:
    """Sort job ids by priority (high first), then submit time, then id."""

    def spec(jid: int) -> JobSpec:
        j = jobs[jid]
        return j.spec if isinstance(j, JobRecord) else j

    return sorted(queue, key=lambda jid: queue_key(spec(jid)))


PLACEMENTS = ("best-fit", "balance")


def choose_server(state: ClusterState, job: JobSpec, placement: str = "best-fit") -> int | None:
    """Most-loaded powered-on server that still fits ``job``; lowest id on ties.

    ``placement="balance"`` instead picks the least-loaded feasible server,
    the load-spreading default of an unmodified batch system. With power management on and no feasible running server, asks for the
    lowest-id switched-off server to boot and returns None for now. A server
    already booting is waited for rather than waking another.
    """
    spread = placement == "balance"
    best = None
    for srv in state.servers:
        free = srv.free_cores
        if free < job.cores:
            continue
        if best is None or (free > best[0] if spread else free < best[0]):
            best = (free, srv.id)
    if best is not None:
        return best[1]
    if state.power_management:
        if any(s.power is Power.POWERING_ON and s.capacity >= job.cores for s in state.servers):
            return None
        for srv in state.servers:
            if srv.power is Power.OFF and srv.capacity >= job.cores:
                state.request_power_on(srv.id)
                break
    return None


def try_dispatch(state: ClusterState, placement: str = "best-fit") -> list[tuple[int, int]]:
    """Start jobs from the queue head until the head does not fit."""
    placements = []
    while True:
        head = state.queue_head()
        if head is None:
            break
        target = choose_server(state, state.jobs[head].spec, placement)
        if target is None:
            break
        state.place(head, target)
        placements.append((head, target))
    return placements
