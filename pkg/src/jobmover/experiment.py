"""Paired mover-off / mover-on runs and parameter sweeps."""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .cluster import JobSpec
from .config import SimConfig
from .engine import run
from .metrics import (SimReport, completed_jobs_improvement, efficiency_improvement, energy,
                      exploitation, final_utilization_improvement, moved_fraction)
from .workload import generate

SWEEP_AXES = {"cores": "cores_per_server", "servers": "num_servers"}
SWEEP_HEADER = "axis_value,seed,improvement_pct,moved_pct,exploitation_base,exploitation_mover"


@dataclass(frozen=True)
class Pair:
    baseline: SimReport
    mover: SimReport

    @property
    def improvement(self) -> float:
        return efficiency_improvement(self.mover, self.baseline)


def _run(args: tuple[SimConfig, Sequence[JobSpec], bool]) -> SimReport:
    config, trace, check = args
    return run(config, trace, check_invariants=check)


def build_trace(config: SimConfig) -> list[JobSpec]:
    return generate(config.workload, config.rng_seed, config.horizon, config.num_servers,
                    config.cores_per_server)


def run_pair(config: SimConfig, trace: Sequence[JobSpec] | None = None, *, workers: int = 1,
             check_invariants: bool = False) -> Pair:
    """Run the same trace without and with the mover."""
    if trace is None:
        trace = build_trace(config)
    jobs = [(config.replace(mover_enabled=False), trace, check_invariants),
            (config.replace(mover_enabled=True), trace, check_invariants)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=2) as pool:
            base, mover = pool.map(_run, jobs)
    else:
        base, mover = map(_run, jobs)
    return Pair(base, mover)


def summary(pair: Pair, config: SimConfig) -> str:
    b, m = pair.baseline, pair.mover
    lines = [
        f"servers = {config.num_servers}",
        f"cores_per_server = {config.cores_per_server}",
        f"horizon_s = {config.horizon}",
        f"seed = {config.rng_seed}",
        f"mover_algorithm = {config.mover_algorithm}",
        f"baseline_placement = {config.baseline_placement}",
        f"efficiency_improvement_pct = {pair.improvement:.1f}",
        f"completed_jobs_improvement_pct = {completed_jobs_improvement(m, b):.1f}",
        f"final_day_utilization_improvement_pct = {final_utilization_improvement(m, b):.1f}",
        f"moved_fraction_pct = {moved_fraction(m):.1f}",
        f"moved_jobs = {m.totals.moved_jobs}",
        f"migration_events = {m.totals.migration_events}",
        f"jobs_run_baseline = {b.totals.total_jobs_seen}",
        f"jobs_run_mover = {m.totals.total_jobs_seen}",
        f"completed_jobs_baseline = {b.totals.completed_jobs}",
        f"completed_jobs_mover = {m.totals.completed_jobs}",
        f"exploitation_baseline_pct = {100 * exploitation(b):.1f}",
        f"exploitation_mover_pct = {100 * exploitation(m):.1f}",
    ]
    if config.power_management:
        watts = config.server_watts
        eb, em = energy(b, watts=watts), energy(m, watts=watts)
        lines += [
            f"energy_unit = {eb.unit}",
            f"energy_baseline = {eb.consumed:.1f}",
            f"energy_mover = {em.consumed:.1f}",
            f"energy_saving_baseline_pct = {eb.saving_pct:.1f}",
            f"energy_saving_mover_pct = {em.saving_pct:.1f}",
            f"energy_saving_mover_vs_baseline_pct = {energy(m, b, watts).saving_pct:.1f}",
        ]
    return "\n".join(lines) + "\n"


def _sweep_point(args: tuple[SimConfig, str, int, int]) -> str:
    config, axis, value, seed = args
    cfg = config.replace(**{SWEEP_AXES[axis]: value, "rng_seed": seed})
    cfg.validate()
    pair = run_pair(cfg)
    return (f"{value},{seed},{pair.improvement:.3f},{moved_fraction(pair.mover):.3f},"
            f"{exploitation(pair.baseline):.6f},{exploitation(pair.mover):.6f}")


def sweep(config: SimConfig, axis: str, values: Sequence[int], seeds: Sequence[int], *,
          workers: int = 1) -> str:
    """One paired run per (value, seed); returns the CSV text."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {', '.join(SWEEP_AXES)}")
    if any(v < 1 for v in values):
        raise ValueError("sweep values must be positive")
    points = [(config, axis, v, s) for v in values for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, points))
    else:
        rows = [_sweep_point(p) for p in points]
    return "\n".join([SWEEP_HEADER, *rows]) + "\n"
