"""Hybrid-system execution, trajectory diagnostics and audits."""

from src.sim.audit import LyapunovReport, MismatchReport, lyapunov_audit, mode_mismatch_audit, sample_lie_bounds
from src.sim.events import GUARD, EventForecast, forecast_events, next_event_time
from src.sim.executor import Horizon, NoiseSpec, simulate
from src.sim.export import load_trajectory, write_trajectory
from src.sim.trajectory import HybridTime, HybridTrajectory, Persistence, PersistenceWitness

__all__ = [
    "GUARD",
    "EventForecast",
    "Horizon",
    "HybridTime",
    "HybridTrajectory",
    "LyapunovReport",
    "MismatchReport",
    "NoiseSpec",
    "Persistence",
    "PersistenceWitness",
    "forecast_events",
    "load_trajectory",
    "lyapunov_audit",
    "mode_mismatch_audit",
    "next_event_time",
    "sample_lie_bounds",
    "simulate",
    "write_trajectory",
]
