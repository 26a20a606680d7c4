"""Discrete-event simulator of a batch farm with a runtime job mover."""

from .cluster import ClusterState, JobSpec, SimulationError
from .config import ConfigError, SimConfig, load_config
from .engine import Simulation, run
from .experiment import Pair, run_pair, sweep
from .metrics import SimReport, efficiency_improvement, energy, exploitation, moved_fraction
from .mover import ALGORITHMS, MigrationPlan, Objective, objective
from .workload import WorkloadSpec, generate, load_trace, save_trace

__all__ = [
    "ALGORITHMS", "ClusterState", "ConfigError", "JobSpec", "MigrationPlan", "Objective", "Pair",
    "SimConfig", "SimReport", "Simulation", "SimulationError", "WorkloadSpec", "efficiency_improvement",
    "energy", "exploitation", "generate", "load_config", "load_trace", "moved_fraction", "objective",
    "run", "run_pair", "save_trace", "sweep",
]
__version__ = "0.1.0"
