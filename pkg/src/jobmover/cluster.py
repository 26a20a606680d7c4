"""Server and job state for a homogeneous multi-core farm.

Jobs request N of a server's C cores. Memory, disk and I/O requests are taken
to be the same N/C fraction of a host, so checking cores is the whole
feasibility test.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum

from .events import EventKind, EventQueue


class SimulationError(RuntimeError):
    """An internal invariant broke; the run cannot continue."""


class CapacityError(SimulationError):
    pass


class LifecycleError(SimulationError):
    pass


class JobState(Enum):
    QUEUED = "queued"
    RUNNING = "running"
    FROZEN = "frozen"
    COMPLETED = "completed"


class Power(Enum):
    ON = "on"
    OFF = "off"
    POWERING_ON = "powering_on"


@dataclass(frozen=True, slots=True)
class JobSpec:
    id: int
    submit_time: int
    cores: int
    runtime: int
    priority: int = 0


@dataclass(slots=True)
class JobRecord:
    spec: JobSpec
    state: JobState = JobState.QUEUED
    server: int | None = None
    segment_start: int | None = None
    restart_time: int | None = None
    completion_time: int | None = None
    executed: int = 0
    dispatch_time: int | None = None
    migrations: list[tuple[int, int, int]] = field(default_factory=list)
    last_migration_time: int | None = None
    completion_event: object = None

    @property
    def remaining(self) -> int:
        return self.spec.runtime - self.executed

    def eligible(self, clock: int, cooldown: int) -> bool:
        """Whether the mover may touch this job at ``clock``."""
        if self.state is not JobState.RUNNING:
            return False
        return self.last_migration_time is None or clock - self.last_migration_time >= cooldown


@dataclass(slots=True)
class Server:
    id: int
    capacity: int
    occupants: set[int] = field(default_factory=set)
    inbound: set[int] = field(default_factory=set)
    used: int = 0
    reserved: int = 0
    power: Power = Power.ON
    ready_time: int | None = None

    @property
    def load(self) -> int:
        """Cores committed to running or inbound frozen jobs."""
        return self.used + self.reserved

    @property
    def free_cores(self) -> int:
        if self.power is not Power.ON:
            return 0
        return self.capacity - self.used - self.reserved

    @property
    def off_capacity(self) -> int:
        return 0 if self.power is Power.ON else self.capacity

    @property
    def idle(self) -> bool:
        return not self.occupants and not self.inbound


def free_cores(server: Server) -> int:
    return server.free_cores


def queue_key(spec: JobSpec) -> tuple[int, int, int]:
    return (-spec.priority, spec.submit_time, spec.id)


class ClusterState:
    """The mutable world of one run: servers, queue, job table and clock.

    Mutators schedule their follow-up events (completions, restarts,
    power-on completions) on ``events`` and append to ``log`` when it is a
    list.
    """

    def __init__(self, num_servers: int, cores_per_server: int, events: EventQueue | None = None,
                 *, power_management: bool = False, power_on_delay: int = 0,
                 log: list | None = None) -> None:
        if num_servers < 1 or cores_per_server < 1:
            raise ValueError("need at least one server with at least one core")
        self.servers = [Server(i, cores_per_server) for i in range(num_servers)]
        self.cores_per_server = cores_per_server
        self.events = events if events is not None else EventQueue()
        self.power_management = power_management
        self.power_on_delay = power_on_delay
        self.jobs: dict[int, JobRecord] = {}
        self.clock = 0
        self.log = log
        self._queue: list[tuple[tuple[int, int, int], int]] = []
        self.frozen: set[int] = set()
        self.completed: set[int] = set()
        self.used_cores = 0
        self.dispatched_jobs = 0
        self.completed_jobs = 0
        self.migration_events = 0
        self.moved_jobs = 0

    # queue

    def enqueue(self, spec: JobSpec) -> JobRecord:
        if spec.id in self.jobs:
            raise LifecycleError(f"job {spec.id} submitted twice")
        if spec.cores > self.cores_per_server:
            raise CapacityError(f"job {spec.id} needs {spec.cores} cores, servers have {self.cores_per_server}")
        rec = JobRecord(spec)
        self.jobs[spec.id] = rec
        heapq.heappush(self._queue, (queue_key(spec), spec.id))
        self._log("submit", spec.id)
        return rec

    @property
    def queue(self) -> list[int]:
        """Queued job ids in dispatch order."""
        return [jid for _, jid in sorted(self._queue)]

    def queue_head(self) -> int | None:
        return self._queue[0][1] if self._queue else None

    def queue_length(self) -> int:
        return len(self._queue)

    def _pop_head(self, job_id: int) -> None:
        if not self._queue or self._queue[0][1] != job_id:
            raise LifecycleError(f"job {job_id} is not at the queue head")
        heapq.heappop(self._queue)

    # placement

    def place(self, job_id: int, server_id: int) -> JobRecord:
        rec = self.jobs[job_id]
        srv = self.servers[server_id]
        cores = rec.spec.cores
        if srv.power is not Power.ON:
            raise CapacityError(f"server {server_id} is {srv.power.value}, cannot host job {job_id}")
        if rec.state is JobState.QUEUED:
            if srv.free_cores < cores:
                raise CapacityError(
                    f"job {job_id} needs {cores} cores, server {server_id} has {srv.free_cores} free")
            self._pop_head(job_id)
            rec.dispatch_time = self.clock
            self.dispatched_jobs += 1
            action = "dispatch"
        elif rec.state is JobState.FROZEN and rec.server == server_id:
            # the slot was held since the freeze
            srv.inbound.discard(job_id)
            srv.reserved -= cores
            self.frozen.discard(job_id)
            rec.restart_time = None
            action = "restart"
        else:
            raise LifecycleError(f"job {job_id} in state {rec.state.value} cannot be placed on {server_id}")
        srv.occupants.add(job_id)
        srv.used += cores
        self.used_cores += cores
        rec.state = JobState.RUNNING
        rec.server = server_id
        rec.segment_start = self.clock
        rec.completion_event = self.events.push(
            self.clock + rec.remaining, EventKind.JOB_COMPLETION, job_id, server_id)
        self._log(action, job_id, server_id)
        return rec

    def release(self, job_id: int) -> JobRecord:
        """Stop a running job, crediting the CPU time of its current segment."""
        rec = self.jobs[job_id]
        if rec.state is not JobState.RUNNING:
            raise LifecycleError(f"cannot release job {job_id}: it is {rec.state.value}")
        srv = self.servers[rec.server]
        srv.occupants.remove(job_id)
        srv.used -= rec.spec.cores
        self.used_cores -= rec.spec.cores
        rec.executed += self.clock - rec.segment_start
        rec.segment_start = None
        if rec.completion_event is not None:
            rec.completion_event.cancelled = True
            rec.completion_event = None
        if rec.executed > rec.spec.runtime:
            raise LifecycleError(f"job {job_id} overran its runtime")
        if rec.executed == rec.spec.runtime:
            rec.state = JobState.COMPLETED
            rec.completion_time = self.clock
            rec.server = None
            self.completed.add(job_id)
            self.completed_jobs += 1
            self._log("complete", job_id, srv.id)
        return rec

    def freeze(self, job_id: int, dest: int, downtime: int) -> JobRecord:
        """Checkpoint a running job and hold room for it on ``dest``."""
        rec = self.jobs[job_id]
        source = rec.server
        target = self.servers[dest]
        if target.free_cores < rec.spec.cores:
            raise CapacityError(f"migration target {dest} lacks room for job {job_id}")
        self.release(job_id)
        if rec.state is JobState.COMPLETED:
            raise LifecycleError(f"job {job_id} finished at its freeze instant")
        rec.state = JobState.FROZEN
        rec.server = dest
        rec.restart_time = self.clock + downtime
        target.inbound.add(job_id)
        target.reserved += rec.spec.cores
        self.frozen.add(job_id)
        if not rec.migrations:
            self.moved_jobs += 1
        rec.migrations.append((self.clock, source, dest))
        rec.last_migration_time = self.clock
        self.migration_events += 1
        self.events.push(rec.restart_time, EventKind.MIGRATION_RESTART, job_id, dest)
        self._log("freeze", job_id, source, dest)
        return rec

    # power

    def power_off_drained(self) -> list[int]:
        switched = []
        for srv in self.servers:
            if srv.power is Power.ON and srv.idle:
                srv.power = Power.OFF
                switched.append(srv.id)
                self._log("power_off", None, srv.id)
        return switched

    def request_power_on(self, server_id: int) -> None:
        srv = self.servers[server_id]
        if srv.power is not Power.OFF:
            return
        srv.power = Power.POWERING_ON
        srv.ready_time = self.clock + self.power_on_delay
        self.events.push(srv.ready_time, EventKind.POWER_ON_COMPLETE, None, server_id)
        self._log("power_on_request", None, server_id)

    def complete_power_on(self, server_id: int) -> None:
        srv = self.servers[server_id]
        if srv.power is not Power.POWERING_ON:
            raise LifecycleError(f"server {server_id} was not powering on")
        srv.power = Power.ON
        srv.ready_time = None
        self._log("power_on", None, server_id)

    # accounting

    @property
    def installed_cores(self) -> int:
        return len(self.servers) * self.cores_per_server

    def powered_on_cores(self) -> int:
        return sum(s.capacity for s in self.servers if s.power is Power.ON)

    def powered_servers(self) -> int:
        """Servers drawing power, including those still booting."""
        return sum(1 for s in self.servers if s.power is not Power.OFF)

    def check_invariants(self) -> None:
        located: dict[int, str] = {}

        def locate(jid: int, where: str) -> None:
            if jid in located:
                raise LifecycleError(f"job {jid} is both {located[jid]} and {where}")
            located[jid] = where

        for _, jid in self._queue:
            locate(jid, "queued")
        used_total = 0
        for srv in self.servers:
            used = sum(self.jobs[j].spec.cores for j in srv.occupants)
            reserved = sum(self.jobs[j].spec.cores for j in srv.inbound)
            if used != srv.used or reserved != srv.reserved:
                raise SimulationError(f"server {srv.id} load counters drifted")
            if used + reserved > srv.capacity:
                raise CapacityError(f"server {srv.id} over capacity: {used}+{reserved} > {srv.capacity}")
            if srv.power is not Power.ON and (srv.occupants or srv.inbound):
                raise SimulationError(f"server {srv.id} is {srv.power.value} but hosts jobs")
            for jid in srv.occupants:
                locate(jid, f"running on {srv.id}")
                if self.jobs[jid].state is not JobState.RUNNING or self.jobs[jid].server != srv.id:
                    raise LifecycleError(f"job {jid} record disagrees with server {srv.id}")
            used_total += used
        if used_total != self.used_cores:
            raise SimulationError("used core counter drifted")
        for jid in self.frozen:
            locate(jid, "frozen")
        for jid in self.completed:
            locate(jid, "completed")
        if len(located) != len(self.jobs):
            raise LifecycleError("some jobs have no lifecycle location")

    def _log(self, action: str, job: int | None, server: int | None = None,
             target: int | None = None) -> None:
        if self.log is not None:
            self.log.append(LogEntry(self.clock, action, job, server, target))


@dataclass(frozen=True, slots=True)
class LogEntry:
    time: int
    action: str
    job: int | None = None
    server: int | None = None
    target: int | None = None

    def __str__(self) -> str:
        fields = [str(self.time), self.action]
        for v in (self.job, self.server, self.target):
            fields.append("-" if v is None else str(v))
        return " ".join(fields)
