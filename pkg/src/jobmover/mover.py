"""Runtime job consolidation.

On every tick the mover looks at the powered-on servers, picks jobs to
checkpoint and restart elsewhere so that whole servers become free, and
applies the plan. Two planners are available:

``drain-greedy``
    Empty the least-loaded servers one at a time into busier ones. A donor
    is only drained if all of its jobs find a home.
``ffd-repack``
    Repack every movable job first-fit-decreasing over the servers ordered
    busiest first, then emit the moves that differ from the current layout.

A plan is kept only if it strictly improves the consolidation objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .cluster import ClusterState, JobState, Power
from .events import EventKind

ALGORITHMS = ("drain-greedy", "ffd-repack")


class Objective(NamedTuple):
    """Compared lexicographically: free servers first, then the biggest hole."""

    fully_free_servers: int
    largest_free_block: int


@dataclass
class MigrationPlan:
    moves: list[tuple[int, int, int]] = field(default_factory=list)
    objective_before: Objective = Objective(0, 0)
    objective_after: Objective = Objective(0, 0)

    def __bool__(self) -> bool:
        return bool(self.moves)

    def __len__(self) -> int:
        return len(self.moves)


def objective_of(capacities: dict[int, int], loads: dict[int, int]) -> Objective:
    free = [capacities[s] - loads[s] for s in capacities]
    return Objective(sum(1 for s in capacities if loads[s] == 0), max(free, default=0))


def objective(state: ClusterState) -> Objective:
    on = [s for s in state.servers if s.power is Power.ON]
    return objective_of({s.id: s.capacity for s in on}, {s.id: s.load for s in on})


class _Snapshot:
    """Load bookkeeping over the powered-on servers, detached from the state."""

    def __init__(self, state: ClusterState, cooldown: int) -> None:
        on = [s for s in state.servers if s.power is Power.ON]
        self.capacity = {s.id: s.capacity for s in on}
        self.load = {s.id: s.load for s in on}
        self.where: dict[int, int] = {}
        self.cores: dict[int, int] = {}
        self.movable: dict[int, list[int]] = {s.id: [] for s in on}
        self.pinned = {s.id: s.reserved for s in on}
        for srv in on:
            for jid in srv.occupants:
                rec = state.jobs[jid]
                self.where[jid] = srv.id
                self.cores[jid] = rec.spec.cores
                if rec.eligible(state.clock, cooldown):
                    self.movable[srv.id].append(jid)
                else:
                    self.pinned[srv.id] += rec.spec.cores

    def objective(self) -> Objective:
        return objective_of(self.capacity, self.load)


def _simulate(snap: _Snapshot, moves: list[tuple[int, int, int]]) -> Objective:
    load = dict(snap.load)
    for jid, src, dst in moves:
        load[src] -= snap.cores[jid]
        load[dst] += snap.cores[jid]
        if load[dst] > snap.capacity[dst]:
            raise AssertionError(f"plan overfills server {dst}")
    return objective_of(snap.capacity, load)


def plan_drain_greedy(state: ClusterState, cooldown: int) -> MigrationPlan:
    snap = _Snapshot(state, cooldown)
    before = snap.objective()
    cap = snap.capacity
    load = dict(snap.load)
    pinned = dict(snap.pinned)
    movable = {s: list(jobs) for s, jobs in snap.movable.items()}
    top = max(cap.values(), default=0)
    by_load: list[set[int]] = [set() for _ in range(top + 1)]
    for s, ld in load.items():
        by_load[ld].add(s)

    def drainable(s: int) -> bool:
        return pinned[s] == 0 and load[s] > 0

    def shift(s: int, delta: int) -> None:
        by_load[load[s]].discard(s)
        load[s] += delta
        by_load[load[s]].add(s)

    def receiver(donor: int, donor_load: int, cores: int) -> int | None:
        # Valid receivers rank above the donor by (load, -id), or cannot be
        # drained themselves; among them take the busiest, lowest id.
        for lvl in range(cap[donor] - cores, 0, -1):
            bucket = by_load[lvl]
            if not bucket:
                continue
            if lvl > donor_load:
                cands = [s for s in bucket if s != donor and cap[s] - lvl >= cores]
            elif lvl == donor_load:
                cands = [s for s in bucket
                         if s != donor and cap[s] - lvl >= cores and (s < donor or not drainable(s))]
            else:
                cands = [s for s in bucket if cap[s] - lvl >= cores and not drainable(s)]
            if cands:
                return min(cands)
        return None

    moves: list[tuple[int, int, int]] = []
    progress = True
    while progress:
        progress = False
        for donor in sorted(load, key=lambda s: (load[s], -s)):
            if not drainable(donor):
                continue
            donor_load = load[donor]
            tentative = []
            for jid in sorted(movable[donor], key=lambda j: (-snap.cores[j], j)):
                dst = receiver(donor, donor_load, snap.cores[jid])
                if dst is None:
                    break
                shift(dst, snap.cores[jid])
                tentative.append((jid, donor, dst))
            if len(tentative) < len(movable[donor]):
                for jid, _, dst in tentative:
                    shift(dst, -snap.cores[jid])
                continue
            shift(donor, -donor_load)
            movable[donor] = []
            for jid, _, dst in tentative:
                # a job that just moved is pinned where it lands
                pinned[dst] += snap.cores[jid]
            moves.extend(tentative)
            progress = True

    if not moves:
        return MigrationPlan([], before, before)
    after = _simulate(snap, moves)
    if after <= before:
        return MigrationPlan([], before, before)
    return MigrationPlan(moves, before, after)


def plan_ffd_repack(state: ClusterState, cooldown: int) -> MigrationPlan:
    snap = _Snapshot(state, cooldown)
    before = snap.objective()
    order = sorted(snap.capacity, key=lambda s: (-snap.load[s], s))
    room = [snap.capacity[s] - snap.pinned[s] for s in order]
    jobs = sorted((j for js in snap.movable.values() for j in js), key=lambda j: (-snap.cores[j], j))
    # first[k]: index of the first server that might still fit k cores
    first = [0] * (max(snap.capacity.values(), default=0) + 1)
    target: dict[int, int] = {}
    for jid in jobs:
        k = snap.cores[jid]
        i = first[k]
        while i < len(order) and room[i] < k:
            i += 1
        first[k] = i
        if i == len(order):
            return MigrationPlan([], before, before)
        room[i] -= k
        target[jid] = order[i]

    pending = [(jid, snap.where[jid], dst) for jid, dst in target.items() if dst != snap.where[jid]]
    pending.sort(key=lambda m: (-snap.cores[m[0]], m[0]))
    load = dict(snap.load)
    moves = []
    progress = True
    while pending and progress:
        progress = False
        stuck = []
        for jid, src, dst in pending:
            k = snap.cores[jid]
            if load[dst] + k <= snap.capacity[dst]:
                load[src] -= k
                load[dst] += k
                moves.append((jid, src, dst))
                progress = True
            else:
                stuck.append((jid, src, dst))
        pending = stuck
    # whatever is still pending waits on a cycle and is dropped

    if not moves:
        return MigrationPlan([], before, before)
    after = _simulate(snap, moves)
    if after <= before:
        return MigrationPlan([], before, before)
    return MigrationPlan(moves, before, after)


PLANNERS = {
    "drain-greedy": plan_drain_greedy,
    "ffd-repack": plan_ffd_repack,
}


def apply_plan(state: ClusterState, plan: MigrationPlan, downtime: int) -> None:
    """Freeze every planned job and book its restart on the destination.

    Queue dispatch is left to the caller, which runs it right after.
    """
    for jid, src, dst in plan.moves:
        rec = state.jobs[jid]
        if rec.state is not JobState.RUNNING or rec.server != src:
            raise ValueError(f"stale plan: job {jid} is not running on server {src}")
        state.freeze(jid, dst, downtime)


def on_mover_tick(state: ClusterState, algorithm: str, cooldown: int, downtime: int,
                  interval: int, horizon: int) -> MigrationPlan:
    plan = PLANNERS[algorithm](state, cooldown)
    if plan:
        apply_plan(state, plan, downtime)
    nxt = state.clock + interval
    if nxt <= horizon:
        state.events.push(nxt, EventKind.MOVER_TICK)
    return plan
