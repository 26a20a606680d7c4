"""Run reports: hourly samples, counters, and the derived efficiency figures."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import NamedTuple

CSV_HEADER = ("time_s", "used_cores", "installed_cores", "powered_on_cores",
              "queued_jobs", "cumulative_core_seconds")


class Sample(NamedTuple):
    time_s: int
    used_cores: int
    installed_cores: int
    powered_on_cores: int
    queued_jobs: int
    cumulative_core_seconds: int


@dataclass(frozen=True)
class Totals:
    completed_jobs: int = 0
    total_jobs_seen: int = 0
    submitted_jobs: int = 0
    moved_jobs: int = 0
    migration_events: int = 0
    cumulative_core_seconds: int = 0
    powered_on_server_seconds: int = 0


@dataclass(frozen=True)
class SimReport:
    samples: tuple[Sample, ...]
    totals: Totals
    installed_cores: int
    horizon: int
    seed: int
    trace_digest: str
    config: dict = field(default_factory=dict)
    # per-job executed seconds at the horizon, the second side of the CPU ledger
    executed_by_job: dict[int, int] = field(default_factory=dict, repr=False, compare=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_HEADER) + "\n")
        for s in self.samples:
            buf.write(",".join(str(v) for v in s) + "\n")
        return buf.getvalue()


class Recorder:
    """Integrates used cores and powered servers over piecewise-constant time."""

    def __init__(self, sample_interval: int, horizon: int) -> None:
        self.sample_interval = sample_interval
        self.horizon = horizon
        self.next_sample = 0
        self.samples: list[Sample] = []
        self.last_time = 0
        self.used = 0
        self.powered = 0
        self.core_seconds = 0
        self.server_seconds = 0

    def advance(self, t: int, state) -> None:
        """Bring the integrals up to ``t``, sampling the settled state on the way.

        Must be called before the first event at ``t`` is applied, with
        ``state`` still as it was after the previous instant settled.
        """
        t = min(t, self.horizon)
        while self.next_sample < t:
            self._sample(state)
        self._accrue(t)

    def rates_changed(self, state) -> None:
        self.used = state.used_cores
        self.powered = state.powered_servers()

    def finish(self, state) -> None:
        self.advance(self.horizon, state)
        if self.next_sample == self.horizon:
            self._sample(state)

    def _sample(self, state) -> None:
        self._accrue(self.next_sample)
        self.samples.append(Sample(self.next_sample, state.used_cores, state.installed_cores,
                                   state.powered_on_cores(), state.queue_length(),
                                   self.core_seconds))
        self.next_sample += self.sample_interval

    def _accrue(self, t: int) -> None:
        if t > self.last_time:
            dt = t - self.last_time
            self.core_seconds += self.used * dt
            self.server_seconds += self.powered * dt
            self.last_time = t


def exploitation(report: SimReport) -> float:
    """Time-averaged fraction of installed cores doing useful work."""
    denom = report.installed_cores * report.horizon
    return report.totals.cumulative_core_seconds / denom if denom else 0.0


def _check_paired(with_mover: SimReport, without: SimReport) -> None:
    if with_mover.trace_digest != without.trace_digest:
        raise ValueError("reports come from different traces")
    if with_mover.horizon != without.horizon or with_mover.seed != without.seed:
        raise ValueError("reports differ in horizon or seed")
    a = {k: v for k, v in with_mover.config.items() if k != "mover_enabled"}
    b = {k: v for k, v in without.config.items() if k != "mover_enabled"}
    if a != b:
        diff = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
        raise ValueError(f"reports differ in config beyond mover_enabled: {diff}")


def efficiency_improvement(with_mover: SimReport, without: SimReport) -> float:
    """Percent gain in cumulative useful core-seconds."""
    _check_paired(with_mover, without)
    base = without.totals.cumulative_core_seconds
    new = with_mover.totals.cumulative_core_seconds
    if base == 0:
        return 0.0 if new == 0 else float("inf")
    return 100.0 * (new / base - 1.0)


def completed_jobs_improvement(with_mover: SimReport, without: SimReport) -> float:
    _check_paired(with_mover, without)
    base = without.totals.completed_jobs
    if base == 0:
        return 0.0 if with_mover.totals.completed_jobs == 0 else float("inf")
    return 100.0 * (with_mover.totals.completed_jobs / base - 1.0)


def final_utilization_improvement(with_mover: SimReport, without: SimReport,
                                  window: int = 24 * 3600) -> float:
    """Percent gain in mean used cores over the last ``window`` seconds."""
    _check_paired(with_mover, without)

    def tail(r: SimReport) -> float:
        pts = [s.used_cores for s in r.samples if s.time_s >= r.horizon - window]
        return sum(pts) / len(pts) if pts else 0.0

    base = tail(without)
    if base == 0:
        return 0.0 if tail(with_mover) == 0 else float("inf")
    return 100.0 * (tail(with_mover) / base - 1.0)


def moved_fraction(report: SimReport) -> float:
    """Percent of jobs that ran on the farm and were migrated at least once."""
    seen = report.totals.total_jobs_seen
    return 100.0 * report.totals.moved_jobs / seen if seen else 0.0


@dataclass(frozen=True)
class Energy:
    consumed: float
    saving_pct: float
    unit: str


def always_on_server_seconds(report: SimReport) -> int:
    """Powered-on server-seconds of the same farm with power management off."""
    return report.config["num_servers"] * report.horizon


def energy(report: SimReport, baseline: SimReport | None = None,
           watts: float | None = None) -> Energy:
    """Energy used by ``report`` and its saving against ``baseline``.

    Without a baseline report the reference is the farm kept fully powered for
    the whole horizon. Without ``watts`` the unit is raw powered-on
    server-seconds; with it, watt-hours.
    """
    def consumed(secs: int) -> float:
        return secs if watts is None else secs * watts / 3600.0

    used = consumed(report.totals.powered_on_server_seconds)
    if baseline is None:
        base = consumed(always_on_server_seconds(report))
    else:
        base = consumed(baseline.totals.powered_on_server_seconds)
    saving = 100.0 * (1.0 - used / base) if base else 0.0
    return Energy(used, saving, "server-seconds" if watts is None else "Wh")
