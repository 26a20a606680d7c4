"""Independent checks: exhaustive packing for tiny farms and event-log replay.

Nothing here shares code with the simulator's state machine, so a bug in one
shows up as a disagreement with the other.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

from .cluster import JobSpec, LogEntry
from .mover import Objective

MAX_SERVERS = 4
MAX_JOBS = 12


class OracleLimitError(ValueError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True)
class PackingInstance:
    capacities: tuple[int, ...]
    demands: tuple[int, ...]
    pinned: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        top = max(self.capacities, default=0)
        if any(d > top for d in self.demands):
            raise ValueError("a job is larger than every server")


def layout_objective(capacities: Sequence[int], demands: Sequence[int],
                     assignment: Sequence[int]) -> Objective:
    loads = [0] * len(capacities)
    for job, srv in enumerate(assignment):
        loads[srv] += demands[job]
    free = [c - l for c, l in zip(capacities, loads)]
    return Objective(sum(1 for l in loads if l == 0), max(free, default=0))


def feasible(capacities: Sequence[int], demands: Sequence[int], assignment: Sequence[int]) -> bool:
    loads = [0] * len(capacities)
    for job, srv in enumerate(assignment):
        loads[srv] += demands[job]
    return all(l <= c for l, c in zip(loads, capacities))


def optimal_objective(instance: PackingInstance) -> Objective:
    """Best objective over every capacity-respecting job-to-server assignment."""
    caps, demands = instance.capacities, instance.demands
    if len(caps) > MAX_SERVERS or len(demands) > MAX_JOBS:
        raise OracleLimitError(
            f"{len(demands)} jobs on {len(caps)} servers exceeds {MAX_JOBS} jobs / {MAX_SERVERS} servers")
    best: Objective | None = None
    assignment = [0] * len(demands)
    room = list(caps)

    def visit(job: int) -> None:
        nonlocal best
        if job == len(demands):
            obj = layout_objective(caps, demands, assignment)
            if best is None or obj > best:
                best = obj
            return
        choices = [instance.pinned[job]] if job in instance.pinned else range(len(caps))
        for srv in choices:
            if room[srv] >= demands[job]:
                room[srv] -= demands[job]
                assignment[job] = srv
                visit(job + 1)
                room[srv] += demands[job]

    visit(0)
    if best is None:
        raise ValueError("no feasible assignment")
    return best


def single_move_gains(instance: PackingInstance, assignment: Sequence[int]) -> list[tuple[int, int, Objective]]:
    """Every single relocation of an unpinned job that strictly improves the objective."""
    caps, demands = instance.capacities, instance.demands
    base = layout_objective(caps, demands, assignment)
    gains = []
    for job in range(len(demands)):
        if job in instance.pinned:
            continue
        for dst in range(len(caps)):
            if dst == assignment[job]:
                continue
            trial = list(assignment)
            trial[job] = dst
            if feasible(caps, demands, trial):
                obj = layout_objective(caps, demands, trial)
                if obj > base:
                    gains.append((job, dst, obj))
    return gains


@dataclass(frozen=True)
class ReplayResult:
    ok: bool
    index: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


class _Divergence(Exception):
    pass


def replay_check(config, trace: Sequence[JobSpec], event_log: Sequence[LogEntry],
                 report=None) -> ReplayResult:
    """Re-execute a run's event log and check every lifecycle and capacity rule.

    When ``report`` is given its totals and per-job CPU seconds must match the
    replay exactly.
    """
    specs = {j.id: j for j in trace}
    n = config.num_servers
    cap = config.cores_per_server
    used = [0] * n
    reserved = [0] * n
    power = ["on"] * n
    ready: list[int | None] = [None] * n
    queued: set[int] = set()
    state: dict[int, str] = {}
    where: dict[int, int] = {}
    seg_start: dict[int, int] = {}
    executed: dict[int, int] = {}
    dispatched_at: dict[int, int] = {}
    restart_at: dict[int, int] = {}
    migrations: dict[int, list[int]] = {}
    completed = 0
    placement = "best-fit" if config.mover_enabled else config.baseline_placement
    downtime = config.migration_downtime
    last_t = 0

    def fail(msg: str) -> None:
        raise _Divergence(msg)

    def key(jid: int) -> tuple[int, int, int]:
        s = specs[jid]
        return (-s.priority, s.submit_time, s.id)

    def expect(cond: bool, msg: str) -> None:
        if not cond:
            fail(msg)

    i = -1
    try:
        for i, e in enumerate(event_log):
            t = e.time
            expect(t >= last_t, f"time went backwards to {t}")
            expect(t <= config.horizon, f"event after horizon at {t}")
            last_t = t
            a = e.action
            if a == "submit":
                expect(e.job in specs, f"unknown job {e.job}")
                expect(e.job not in state, f"job {e.job} submitted twice")
                expect(t >= specs[e.job].submit_time, f"job {e.job} submitted early")
                state[e.job] = "queued"
                queued.add(e.job)
                executed[e.job] = 0
            elif a == "dispatch":
                j, s = e.job, e.server
                expect(state.get(j) == "queued", f"dispatch of non-queued job {j}")
                expect(j == min(queued, key=key), f"job {j} dispatched ahead of the queue head")
                expect(power[s] == "on", f"dispatch onto server {s} which is {power[s]}")
                cores = specs[j].cores
                free = [cap - used[k] - reserved[k] if power[k] == "on" else -1 for k in range(n)]
                expect(free[s] >= cores, f"server {s} over capacity")
                fits = [k for k in range(n) if free[k] >= cores]
                if placement == "best-fit":
                    want = min(fits, key=lambda k: (free[k], k))
                else:
                    want = min(fits, key=lambda k: (-free[k], k))
                expect(s == want, f"job {j} placed on {s}, {placement} picks {want}")
                queued.remove(j)
                state[j], where[j], seg_start[j] = "running", s, t
                dispatched_at[j] = t
                used[s] += cores
            elif a == "restart":
                j, s = e.job, e.server
                expect(state.get(j) == "frozen" and where[j] == s, f"restart of job {j} not frozen to {s}")
                expect(t == restart_at[j], f"job {j} restarted at {t}, expected {restart_at[j]}")
                expect(power[s] == "on", f"restart onto server {s} which is {power[s]}")
                reserved[s] -= specs[j].cores
                used[s] += specs[j].cores
                state[j], seg_start[j] = "running", t
            elif a == "complete":
                j, s = e.job, e.server
                expect(state.get(j) == "running" and where[j] == s, f"completion of job {j} not running on {s}")
                done = executed[j] + t - seg_start[j]
                expect(done == specs[j].runtime,
                       f"job {j} completed after {done}s of CPU, runtime is {specs[j].runtime}")
                expected_end = dispatched_at[j] + specs[j].runtime + downtime * len(migrations.get(j, []))
                expect(t == expected_end, f"job {j} finished at {t}, expected {expected_end}")
                executed[j] = done
                used[s] -= specs[j].cores
                state[j] = "completed"
                completed += 1
            elif a == "freeze":
                j, src, dst = e.job, e.server, e.target
                expect(config.mover_enabled, "migration with the mover disabled")
                expect(state.get(j) == "running" and where[j] == src, f"freeze of job {j} not running on {src}")
                expect(dst != src and power[dst] == "on", f"bad migration target {dst}")
                hist = migrations.setdefault(j, [])
                expect(not hist or t - hist[-1] >= config.cooldown,
                       f"job {j} migrated again after {t - hist[-1] if hist else 0}s")
                cores = specs[j].cores
                used[src] -= cores
                expect(used[dst] + reserved[dst] + cores <= cap, f"migration overfills server {dst}")
                reserved[dst] += cores
                executed[j] += t - seg_start[j]
                expect(executed[j] < specs[j].runtime, f"job {j} frozen after finishing")
                hist.append(t)
                state[j], where[j] = "frozen", dst
                restart_at[j] = t + downtime
            elif a == "power_off":
                s = e.server
                expect(power[s] == "on" and used[s] == 0 and reserved[s] == 0, f"server {s} switched off busy")
                power[s] = "off"
            elif a == "power_on_request":
                s = e.server
                expect(power[s] == "off", f"power-on request for server {s} which is {power[s]}")
                power[s], ready[s] = "booting", t + config.power_on_delay
            elif a == "power_on":
                s = e.server
                expect(power[s] == "booting" and ready[s] == t, f"server {s} came up at the wrong time")
                power[s], ready[s] = "on", None
            else:
                fail(f"unknown action {a!r}")
            for k in range(n):
                if used[k] + reserved[k] > cap:
                    fail(f"server {k} over capacity")

        i = len(event_log)
        h = config.horizon
        for j, st in state.items():
            if st == "running":
                expect(seg_start[j] + specs[j].runtime - executed[j] > h, f"job {j} never completed")
                executed[j] += h - seg_start[j]
            elif st == "frozen":
                expect(restart_at[j] > h, f"job {j} never restarted")
        for k in range(n):
            if power[k] == "booting":
                expect(ready[k] > h, f"server {k} never finished booting")

        if report is not None:
            tot = report.totals
            core_seconds = sum(executed[j] * specs[j].cores for j in executed)
            checks = [
                ("completed_jobs", completed, tot.completed_jobs),
                ("total_jobs_seen", len(dispatched_at), tot.total_jobs_seen),
                ("submitted_jobs", len(state), tot.submitted_jobs),
                ("moved_jobs", len(migrations), tot.moved_jobs),
                ("migration_events", sum(len(v) for v in migrations.values()), tot.migration_events),
                ("cumulative_core_seconds", core_seconds, tot.cumulative_core_seconds),
            ]
            for name, mine, theirs in checks:
                expect(mine == theirs, f"{name}: replay {mine} vs report {theirs}")
            if report.executed_by_job:
                expect(report.executed_by_job == executed, "per-job CPU seconds differ")
    except _Divergence as exc:
        return ReplayResult(False, i, str(exc))
    return ReplayResult(True)
