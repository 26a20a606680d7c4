"""The discrete-event loop tying cluster, scheduler, mover and metrics together."""

from __future__ import annotations

import hashlib
import logging
from collections.abc import Sequence

from .cluster import ClusterState, JobSpec, JobState, SimulationError
from .config import ConfigError, SimConfig
from .events import Event, EventKind, EventQueue
from .metrics import Recorder, SimReport, Totals
from .mover import on_mover_tick
from .scheduler import try_dispatch

log = logging.getLogger("jobmover")


class TraceValidationError(ValueError):
    pass


def validate_trace(trace: Sequence[JobSpec], cores_per_server: int) -> None:
    seen = set()
    last = 0
    for job in trace:
        if job.id in seen:
            raise TraceValidationError(f"duplicate job id {job.id}")
        seen.add(job.id)
        if job.submit_time < last:
            raise TraceValidationError(f"trace is not sorted by submit time at job {job.id}")
        last = job.submit_time
        if job.cores < 1 or job.cores > cores_per_server:
            raise TraceValidationError(
                f"job {job.id} asks for {job.cores} cores; servers have {cores_per_server}")
        if job.runtime < 1:
            raise TraceValidationError(f"job {job.id} has non-positive runtime {job.runtime}")


def trace_digest(trace: Sequence[JobSpec]) -> str:
    h = hashlib.sha256()
    for j in trace:
        h.update(f"{j.id} {j.submit_time} {j.cores} {j.runtime} {j.priority}\n".encode())
    return h.hexdigest()


class Simulation:
    """One run over a fixed trace. Use :meth:`run`, or :meth:`advance` to single-step."""

    def __init__(self, config: SimConfig, trace: Sequence[JobSpec], *,
                 event_log: list | None = None, check_invariants: bool = False) -> None:
        config.validate()
        validate_trace(trace, config.cores_per_server)
        self.config = config
        self.trace = list(trace)
        self.events = EventQueue()
        self.log = event_log
        self.check_invariants = check_invariants
        self.state = ClusterState(config.num_servers, config.cores_per_server, self.events,
                                  power_management=config.power_management,
                                  power_on_delay=config.power_on_delay, log=event_log)
        self.queue_limit = config.workload.queue_limit(config.num_servers)
        self.recorder = Recorder(config.sample_interval, config.horizon)
        self.processed = 0
        self.plans_applied = 0
        self._cursor = 0
        self._arrival_pending = False

        if config.power_management:
            self.state.power_off_drained()
        self.recorder.rates_changed(self.state)
        if self.trace:
            first = self.trace[0]
            self.events.push(first.submit_time, EventKind.JOB_ARRIVAL, first.id)
            self._arrival_pending = True
        if config.mover_enabled and config.mover_interval <= config.horizon:
            self.events.push(config.mover_interval, EventKind.MOVER_TICK)

    @property
    def clock(self) -> int:
        return self.state.clock

    def advance(self) -> Event:
        ev = self.events.pop()
        if ev.time < self.state.clock:
            raise SimulationError(f"clock would run backwards to {ev.time} from {self.state.clock}")
        self.recorder.advance(ev.time, self.state)
        self.state.clock = ev.time
        if log.isEnabledFor(logging.DEBUG):
            log.debug("%r", ev)
        self._handle(ev)
        nxt = self.events.peek()
        # Dispatch once per instant, after every completion, restart and
        # arrival at this timestamp, and before a mover tick looks at the farm.
        if nxt is None or nxt.time != ev.time or nxt.kind is EventKind.MOVER_TICK:
            self._settle()
        self.recorder.rates_changed(self.state)
        if self.check_invariants:
            self.state.check_invariants()
        self.processed += 1
        return ev

    def run(self) -> SimReport:
        horizon = self.config.horizon
        while (nxt := self.events.peek()) is not None and nxt.time <= horizon:
            self.advance()
        self.recorder.finish(self.state)
        return self._report()

    def _handle(self, ev: Event) -> None:
        st = self.state
        if ev.kind is EventKind.JOB_COMPLETION:
            rec = st.jobs[ev.job]
            if rec.state is not JobState.RUNNING or rec.server != ev.server:
                raise SimulationError(f"completion for job {ev.job} which is not running on {ev.server}")
            st.release(ev.job)
            if rec.state is not JobState.COMPLETED:
                raise SimulationError(f"job {ev.job} completion fired early")
        elif ev.kind is EventKind.MIGRATION_RESTART:
            st.place(ev.job, ev.server)
        elif ev.kind is EventKind.POWER_ON_COMPLETE:
            st.complete_power_on(ev.server)
        elif ev.kind is EventKind.JOB_ARRIVAL:
            self._arrival_pending = False
        elif ev.kind is EventKind.MOVER_TICK:
            cfg = self.config
            plan = on_mover_tick(st, cfg.mover_algorithm, cfg.cooldown, cfg.migration_downtime,
                                 cfg.mover_interval, cfg.horizon)
            if plan:
                self.plans_applied += 1
                log.info("t=%d mover moved %d jobs, objective %s -> %s", st.clock, len(plan),
                         tuple(plan.objective_before), tuple(plan.objective_after))

    def _admit(self) -> None:
        st = self.state
        trace, limit = self.trace, self.queue_limit
        while (self._cursor < len(trace) and trace[self._cursor].submit_time <= st.clock
               and (limit is None or st.queue_length() < limit)):
            st.enqueue(trace[self._cursor])
            self._cursor += 1
        if (self._cursor < len(trace) and trace[self._cursor].submit_time > st.clock
                and not self._arrival_pending):
            nxt = trace[self._cursor]
            self.events.push(nxt.submit_time, EventKind.JOB_ARRIVAL, nxt.id)
            self._arrival_pending = True

    def _settle(self) -> None:
        while True:
            self._admit()
            if not try_dispatch(self.state, self.config.placement):
                break
        if self.config.power_management:
            self.state.power_off_drained()

    def _report(self) -> SimReport:
        st, cfg = self.state, self.config
        executed = {}
        for jid, rec in st.jobs.items():
            done = rec.executed
            if rec.state is JobState.RUNNING:
                done += cfg.horizon - rec.segment_start
            executed[jid] = done
        ledger = sum(secs * st.jobs[jid].spec.cores for jid, secs in executed.items())
        if ledger != self.recorder.core_seconds:
            raise SimulationError(
                f"CPU ledger mismatch: jobs {ledger} vs time series {self.recorder.core_seconds}")
        totals = Totals(
            completed_jobs=st.completed_jobs,
            total_jobs_seen=st.dispatched_jobs,
            submitted_jobs=len(st.jobs),
            moved_jobs=st.moved_jobs,
            migration_events=st.migration_events,
            cumulative_core_seconds=ledger,
            powered_on_server_seconds=self.recorder.server_seconds,
        )
        return SimReport(tuple(self.recorder.samples), totals, st.installed_cores, cfg.horizon,
                         cfg.rng_seed, trace_digest(self.trace), cfg.echo(), executed)


def run(config: SimConfig, trace: Sequence[JobSpec], *, event_log: list | None = None,
        check_invariants: bool = False) -> SimReport:
    return Simulation(config, trace, event_log=event_log, check_invariants=check_invariants).run()


__all__ = ["ConfigError", "Simulation", "TraceValidationError", "run", "trace_digest", "validate_trace"]
