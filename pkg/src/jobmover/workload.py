"""Job stream generators and the plain-text trace format.

Trace files hold one job per line, ``submit_time_s cores runtime_s priority``,
space separated. Lines starting with ``#`` are comments. Job ids are the
zero-based position of the job in the file.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from os import PathLike
from pathlib import Path

from .cluster import JobSpec

HOUR = 3600
DAY = 24 * HOUR


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str = "random"
    trace_path: str | None = None
    # random
    cores_min: int = 1
    cores_max: int | None = None
    runtime_min: int = HOUR
    runtime_max: int = 15 * DAY
    arrival: str = "saturated"
    backlog: int | None = None
    mean_interarrival: float | None = None
    # worstcase
    long_runtime: int = 15 * DAY
    short_runtime: int = HOUR
    monos_per_cycle: int | None = None
    fullcores_per_cycle: int | None = None
    cycle_period: int = HOUR

    def validate(self, cores_per_server: int) -> None:
        if self.kind not in ("random", "worstcase", "trace"):
            raise ValueError(f"unknown workload kind {self.kind!r}")
        if self.kind == "trace" and not self.trace_path:
            raise ValueError("trace workload needs trace_path")
        if self.cores_min < 1:
            raise ValueError("cores_min must be >= 1")
        cmax = self.cores_max if self.cores_max is not None else cores_per_server
        if cmax > cores_per_server or cmax < self.cores_min:
            raise ValueError(f"cores range [{self.cores_min}, {cmax}] does not fit {cores_per_server}-core servers")
        if self.runtime_min < 1 or self.runtime_max < self.runtime_min:
            raise ValueError("runtime range must satisfy 1 <= runtime_min <= runtime_max")
        if self.arrival not in ("saturated", "interval"):
            raise ValueError(f"unknown arrival mode {self.arrival!r}")
        if self.arrival == "interval" and self.kind == "random" and not self.mean_interarrival:
            raise ValueError("interval arrivals need mean_interarrival > 0")
        if self.backlog is not None and self.backlog < 1:
            raise ValueError("backlog must be >= 1")
        if self.long_runtime < 1 or self.short_runtime < 1 or self.cycle_period < 1:
            raise ValueError("worst-case runtimes and cycle period must be >= 1")
        if (self.monos_per_cycle or 0) < 0 or (self.fullcores_per_cycle or 0) < 0:
            raise ValueError("per-cycle job counts must be non-negative")

    def queue_limit(self, num_servers: int) -> int | None:
        """Queue length the saturated random stream is topped up to, else None."""
        if self.kind == "random" and self.arrival == "saturated":
            return self.backlog if self.backlog is not None else 4 * num_servers
        return self.backlog if self.kind == "trace" else None


def gen_random(spec: WorkloadSpec, seed: int, horizon: int, cores_per_server: int,
               num_servers: int = 1) -> list[JobSpec]:
    """Draw uniform core counts and runtimes.

    Saturated mode puts every job at t=0; the simulator admits them into the
    queue only as far as the backlog limit, so the stream is just long enough
    that no schedule can exhaust it within ``horizon``.
    """
    cmin = spec.cores_min
    cmax = spec.cores_max if spec.cores_max is not None else cores_per_server
    rng = random.Random(seed)
    jobs: list[JobSpec] = []

    def draw(jid: int, t: int) -> JobSpec:
        cores = rng.randint(cmin, cmax)
        runtime = rng.randint(spec.runtime_min, spec.runtime_max)
        return JobSpec(jid, t, cores, runtime)

    if spec.arrival == "saturated":
        budget = num_servers * cores_per_server * horizon
        demand = 0
        while demand <= budget:
            job = draw(len(jobs), 0)
            demand += job.cores * job.runtime
            jobs.append(job)
        # headroom for jobs still running at the horizon plus a full backlog
        limit = spec.queue_limit(num_servers) or 0
        for _ in range(num_servers * cores_per_server // cmin + limit):
            jobs.append(draw(len(jobs), 0))
        return jobs

    t = 0.0
    mean = spec.mean_interarrival
    while True:
        t += rng.expovariate(1.0 / mean)
        if t > horizon:
            return jobs
        jobs.append(draw(len(jobs), int(t)))


def gen_worstcase(spec: WorkloadSpec, horizon: int, num_servers: int,
                  cores_per_server: int) -> list[JobSpec]:
    """Each cycle: long single-core jobs, then short jobs filling a whole server."""
    fulls = spec.fullcores_per_cycle if spec.fullcores_per_cycle is not None else num_servers
    monos = spec.monos_per_cycle if spec.monos_per_cycle is not None else num_servers
    jobs: list[JobSpec] = []
    start = 0
    while start < horizon:
        for _ in range(monos):
            jobs.append(JobSpec(len(jobs), start, 1, spec.long_runtime))
        for _ in range(fulls):
            jobs.append(JobSpec(len(jobs), start + 1, cores_per_server, spec.short_runtime))
        start += spec.cycle_period
    return jobs


def generate(spec: WorkloadSpec, seed: int, horizon: int, num_servers: int,
             cores_per_server: int) -> list[JobSpec]:
    spec.validate(cores_per_server)
    if spec.kind == "random":
        return gen_random(spec, seed, horizon, cores_per_server, num_servers)
    if spec.kind == "worstcase":
        return gen_worstcase(spec, horizon, num_servers, cores_per_server)
    return load_trace(spec.trace_path)


def save_trace(jobs: list[JobSpec], path: str | PathLike) -> None:
    lines = ["# submit_time_s cores runtime_s priority"]
    lines += [f"{j.submit_time} {j.cores} {j.runtime} {j.priority}" for j in jobs]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_trace(text: str, name: str = "<trace>") -> list[JobSpec]:
    jobs: list[JobSpec] = []
    last = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 4:
            raise TraceError(f"{name}:{lineno}: expected 4 fields, got {len(fields)}: {raw!r}")
        try:
            submit, cores, runtime, priority = (int(f) for f in fields)
        except ValueError:
            raise TraceError(f"{name}:{lineno}: non-integer field in {raw!r}") from None
        if submit < 0:
            raise TraceError(f"{name}:{lineno}: negative submit time")
        if cores <= 0 or runtime <= 0:
            raise TraceError(f"{name}:{lineno}: cores and runtime must be positive")
        if submit < last:
            raise TraceError(f"{name}:{lineno}: submit time {submit} goes backwards (previous {last})")
        last = submit
        jobs.append(JobSpec(len(jobs), submit, cores, runtime, priority))
    return jobs


def load_trace(path: str | PathLike) -> list[JobSpec]:
    return parse_trace(Path(path).read_text(), str(path))
