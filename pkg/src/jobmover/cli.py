"""``jobmover-sim`` command line.

Exit codes: 0 success, 1 bad config or trace, 2 internal invariant failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .cluster import SimulationError
from .config import ConfigError, SimConfig, load_config
from .engine import Simulation, TraceValidationError
from .experiment import SWEEP_AXES, build_trace, run_pair, summary, sweep
from .mover import ALGORITHMS
from .oracle import replay_check
from .workload import TraceError, load_trace, save_trace

log = logging.getLogger("jobmover")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}") from None


def _overrides(args: argparse.Namespace) -> dict[str, str]:
    out = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    if getattr(args, "seed", None) is not None:
        out["rng_seed"] = str(args.seed)
    if getattr(args, "algorithm", None):
        out["mover_algorithm"] = args.algorithm
    return out


def _trace_for(config: SimConfig):
    if config.workload.kind == "trace":
        return load_trace(config.workload.trace_path)
    return build_trace(config)


def _checked_run(config: SimConfig, trace):
    """Run with per-event invariant checks and replay the event log."""
    reports = []
    for enabled in (False, True):
        cfg = config.replace(mover_enabled=enabled)
        event_log: list = []
        rep = Simulation(cfg, trace, event_log=event_log, check_invariants=True).run()
        res = replay_check(cfg, trace, event_log, rep)
        if not res:
            raise SimulationError(f"replay diverged at log entry {res.index}: {res.reason}")
        reports.append(rep)
    from .experiment import Pair
    return Pair(*reports)


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config, _overrides(args))
    trace = _trace_for(config)
    if args.check:
        pair = _checked_run(config, trace)
    else:
        pair = run_pair(config, trace, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "baseline.csv").write_text(pair.baseline.to_csv())
    (out / "mover.csv").write_text(pair.mover.to_csv())
    text = summary(pair, config)
    (out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config, _overrides(args))
    seeds = args.seeds if args.seeds else [config.rng_seed]
    if config.workload.kind == "trace":
        raise ConfigError("sweeps need a generated workload, not a fixed trace")
    try:
        text = sweep(config, args.axis, args.values, seeds, workers=args.workers)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    config = load_config(args.config, _overrides(args))
    if config.workload.kind == "trace":
        raise ConfigError("gen needs a random or worstcase workload")
    save_trace(build_trace(config), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jobmover-sim",
                                description="Batch farm simulator with a runtime job mover.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", required=True, help="key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")

    r = sub.add_parser("run", help="paired run without and with the mover")
    common(r)
    r.add_argument("--out", default="out")
    r.add_argument("--seed", type=int)
    r.add_argument("--algorithm", choices=ALGORITHMS)
    r.add_argument("--workers", type=int, default=1, help="run the pair in parallel when > 1")
    r.add_argument("--check", action="store_true",
                   help="assert invariants after every event and replay the event logs")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="paired runs over cores per server or server count")
    common(s)
    s.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    s.add_argument("--values", required=True, type=_int_list)
    s.add_argument("--seeds", type=_int_list)
    s.add_argument("--algorithm", choices=ALGORITHMS)
    s.add_argument("--out", default="out")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("gen", help="write the configured workload as a trace file")
    common(g)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_gen)
    return p


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("JOBMOVER_SIM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SimulationError as exc:
        print(f"jobmover-sim: internal error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, TraceError, TraceValidationError, OSError, ValueError) as exc:
        print(f"jobmover-sim: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
