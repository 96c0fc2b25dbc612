"""
Run Pipeline

Turns a RunConfig into a simulation: load or generate the LP, optionally
rescale it by max-consensus, fold gamma into the cost, compute reference
solutions, simulate, and write all artifacts to the output directory.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from src.config import RunConfig
from src.dynamics.lyapunov import LagrangianParams, SaddleReference, compute_saddle
from src.errors import DivergenceError, OracleError, ZenoAbortError
from src.lp.oracle import oracle_solve_lp
from src.lp.problem import RegularizedQP, StandardLP
from src.network.scaling import ScalingResult, max_consensus_scale
from src.network.topology import AgentGraph, build_graph
from src.sim.audit import lyapunov_audit, mode_mismatch_audit
from src.sim.executor import Horizon, NoiseSpec, simulate
from src.sim.export import write_trajectory
from src.sim.trajectory import HybridTrajectory
from src.triggers.config import TriggerConfig, default_config
from src.triggers.state import NetworkState, synchronized_state

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.txt"


@dataclass(eq=False)
class PreparedRun:
    """Everything the executor needs, derived from a RunConfig."""

    config: RunConfig
    problem: StandardLP
    flow_lp: StandardLP
    graph: AgentGraph
    trigger_config: TriggerConfig
    init: NetworkState
    scaling: Optional[ScalingResult] = None
    saddle: Optional[SaddleReference] = None
    x_star: Optional[np.ndarray] = None

    @property
    def horizon(self) -> Horizon:
        return Horizon(t_max=self.config.t_max, j_max=self.config.j_max)

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec(enabled=self.config.noise_enabled, std_dev=self.config.noise_std, seed=self.config.seed)


@dataclass(eq=False)
class RunOutcome:
    prepared: PreparedRun
    trajectory: Optional[HybridTrajectory]
    metrics: Dict[str, object] = field(default_factory=dict)
    status: str = "ok"
    error: Optional[str] = None


def _reference(solve, label: str):
    """Oracle result, or None when the instance exceeds the oracle size limit."""
    try:
        return solve()
    except OracleError as exc:
        if exc.code == "oracle-size-limit":
            logger.warning(f"{label}: {exc}; continuing without it")
            return None
        raise


def prepare_run(config: RunConfig) -> PreparedRun:
    """
    Build the flow problem, agent graph, trigger parameters and initial state.

    Raises:
        ProblemFormatError: if the problem file is unreadable
        ConfigValidationError: if the trigger parameters violate their bounds
        OracleError: if the problem is infeasible or unbounded
    """
    problem = config.resolve_problem()
    graph = build_graph(problem)

    scaling = max_consensus_scale(problem, graph) if config.preprocess else None
    scaled = scaling.scaled if scaling is not None else problem
    flow_lp = RegularizedQP(scaled, config.gamma).flow_problem()

    saddle = _reference(lambda: compute_saddle(flow_lp), "saddle reference")
    lp_point = _reference(lambda: oracle_solve_lp(problem, config.feasibility_tol), "LP reference")
    x_star = None if lp_point is None else np.array(lp_point.x_star)

    cfg = default_config(graph, config.mode, mu=config.mu, tau_scale=config.tau_scale,
                         rmin_scale=config.rmin_scale)
    x0, z0 = config.initial_point(problem)
    return PreparedRun(
        config=config,
        problem=problem,
        flow_lp=flow_lp,
        graph=graph,
        trigger_config=cfg,
        init=synchronized_state(x0, z0),
        scaling=scaling,
        saddle=saddle,
        x_star=x_star,
    )


def collect_metrics(prepared: PreparedRun, traj: HybridTrajectory) -> Dict[str, object]:
    """Trajectory metrics plus preprocessing and audit summaries."""
    metrics = traj.metrics(prepared.flow_lp, prepared.x_star)
    metrics["problem"] = prepared.problem.name
    metrics["mode"] = prepared.trigger_config.mode.value
    metrics["gamma"] = prepared.config.gamma
    metrics["noise_std"] = prepared.config.noise_std
    if prepared.scaling is not None:
        metrics["preprocessing"] = prepared.scaling.summary()
    if prepared.saddle is not None and traj.diagnostics is not None:
        params = LagrangianParams(K=float(metrics["K"]), saddle=prepared.saddle)
        metrics["lyapunov_audit"] = lyapunov_audit(traj, prepared.flow_lp, params).summary()
    if prepared.trigger_config.distributed and traj.diagnostics is not None:
        metrics["mismatch_audit"] = mode_mismatch_audit(traj, prepared.flow_lp, prepared.graph,
                                                        prepared.trigger_config).summary()
    return metrics


def _json_ready(value):
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if np.isfinite(v) else str(v)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_metrics(metrics: Dict[str, object], out_dir: Path) -> Path:
    path = Path(out_dir) / METRICS_FILE
    path.write_text(json.dumps(_json_ready(metrics), indent=2, sort_keys=True))
    return path


def execute_run(config: RunConfig, prepared: Optional[PreparedRun] = None) -> RunOutcome:
    """
    Simulate and write trajectory.csv, events.csv, metrics.txt and config.echo.

    Zeno aborts and divergence still export the partial trajectory; the
    outcome status records which one happened. Other errors propagate.
    """
    if prepared is None:
        prepared = prepare_run(config)
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.write_echo(out_dir)

    status, error = "ok", None
    try:
        traj = simulate(prepared.flow_lp, prepared.graph, prepared.trigger_config, prepared.init,
                        prepared.horizon, prepared.noise, saddle=prepared.saddle,
                        sample_every=config.sample_every)
    except ZenoAbortError as exc:
        traj, status, error = exc.trajectory, exc.code, str(exc)
    except DivergenceError as exc:
        traj, status, error = exc.trajectory, exc.code, str(exc)

    write_trajectory(traj, out_dir)
    if status == "divergence":
        metrics: Dict[str, object] = {"status": status, "error": error, "t_end": traj.t_end,
                                      "jumps": traj.n_jumps, "broadcasts": len(traj.events)}
    else:
        metrics = collect_metrics(prepared, traj)
        metrics["status"] = status
        if error:
            metrics["error"] = error
    write_metrics(metrics, out_dir)
    return RunOutcome(prepared=prepared, trajectory=traj, metrics=metrics, status=status, error=error)
