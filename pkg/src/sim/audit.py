"""
Trajectory Audits

Post-hoc checks of a recorded trajectory against the guarantees of the
event-triggered design: the mode-mismatch bound, monotonicity of V and the
Lie-derivative bound at individual samples. Audits report; they never raise.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.dynamics.flow import PrimalDualPoint, flow_f_batch
from src.dynamics.lyapunov import LagrangianParams, lie_derivative_check
from src.errors import ModePreconditionError
from src.lp.problem import StandardLP
from src.network.topology import AgentGraph
from src.sim.trajectory import HybridTrajectory, SampleKind
from src.triggers.config import TriggerConfig

logger = logging.getLogger(__name__)

MISMATCH_TOL = 1e-9
MONOTONE_TOL = 1e-7
GAIN_TOL = 1e-6
NU_SQUARED = 8.0


@dataclass
class MismatchInterval:
    agent: int
    start: float
    end: float
    worst_ratio: float
    bound_ok: bool
    duration_ok: bool

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class MismatchReport:
    intervals: List[MismatchInterval] = field(default_factory=list)
    stale_positive: int = 0

    @property
    def violations(self) -> List[MismatchInterval]:
        return [iv for iv in self.intervals if not (iv.bound_ok and iv.duration_ok)]

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> Dict[str, object]:
        return {
            "intervals": len(self.intervals),
            "bound_violations": sum(not iv.bound_ok for iv in self.intervals),
            "duration_violations": sum(not iv.duration_ok for iv in self.intervals),
            "stale_positive": self.stale_positive,
            "longest": max((iv.duration for iv in self.intervals), default=0.0),
        }


def _brackets(lp: StandardLP, graph: AgentGraph, traj: HybridTrajectory) -> np.ndarray:
    """
    Per sample and real agent: f_hat^T I_{sig_hat & N_i^x} f_hat + g_hat^T I_{N_i^z} g_hat.
    """
    X_hat, Z_hat = traj.X_hat, traj.Z_hat
    F_hat = flow_f_batch(lp, X_hat, Z_hat)
    G_hat = (lp.A @ X_hat.T).T - lp.b
    sig_hat = traj.diagnostics.sigma_hat
    out = np.zeros((len(traj.samples), lp.n))
    for i in range(lp.n):
        real = list(graph.real_neighbors(i))
        rows = [v - lp.n for v in graph.virtual_neighbors(i)]
        fr = np.where(sig_hat[:, real], F_hat[:, real], 0.0) if real else np.zeros((len(traj.samples), 0))
        out[:, i] = np.sum(fr ** 2, axis=1) + np.sum(G_hat[:, rows] ** 2, axis=1)
    return out


def _entry_time(t: np.ndarray, f: np.ndarray, k: int, i: int, kinds: List[SampleKind]) -> float:
    """Interpolate the zero-crossing of f_i over the flow piece ending at sample k."""
    if k == 0 or kinds[k] is SampleKind.JUMP:
        return float(t[k])
    f0, f1 = f[k - 1, i], f[k, i]
    if f0 < 0.0 <= f1 and f1 != f0:
        return float(t[k - 1] + (t[k] - t[k - 1]) * (-f0) / (f1 - f0))
    return float(t[k])


def mode_mismatch_audit(traj: HybridTrajectory, lp: StandardLP, graph: AgentGraph,
                        cfg: TriggerConfig) -> MismatchReport:
    """
    Verify the mode-mismatch bound on every interval where some i is in
    sigma(x, z) but not in sigma(x_hat, z_hat) while x_i = 0.

    Checked per interval: f_i^2 <= 8 (t - T)^2 B_max, with T the entry time and
    B_max the largest bracket over the broadcasts in force so far, and the
    interval length is at most tau_i.

    Args:
        traj: Trajectory with diagnostics attached
        lp: Flow problem the trajectory was simulated on
        graph: Agent graph
        cfg: Trigger parameters (tau_i)

    Returns:
        MismatchReport (empty for trajectories without mismatches)
    """
    report = MismatchReport()
    if traj.diagnostics is None or not traj.samples:
        return report
    d = traj.diagnostics
    t = traj.t
    X = traj.X
    kinds = traj.kinds
    mismatch = d.sigma & ~d.sigma_hat
    if not mismatch.any():
        return report
    brackets = _brackets(lp, graph, traj)

    for i in range(lp.n):
        k = 0
        total = len(t)
        while k < total:
            if not mismatch[k, i]:
                k += 1
                continue
            if X[k, i] > 0.0:
                report.stale_positive += 1
                while k < total and mismatch[k, i]:
                    k += 1
                continue
            start = _entry_time(t, d.f, k, i, kinds)
            b_max = brackets[k - 1, i] if k > 0 else 0.0
            worst = 0.0
            bound_ok = True
            while k < total and mismatch[k, i] and X[k, i] <= 0.0:
                b_max = max(b_max, brackets[k, i])
                elapsed = t[k] - start
                lhs = d.f[k, i] ** 2
                rhs = NU_SQUARED * elapsed * elapsed * b_max
                if lhs > rhs + MISMATCH_TOL:
                    bound_ok = False
                if rhs > 0.0:
                    worst = max(worst, lhs / rhs)
                k += 1
            end = float(t[k]) if k < total else float(t[-1])
            duration_ok = end - start <= cfg.tau[i] + MISMATCH_TOL
            report.intervals.append(MismatchInterval(i, start, end, worst, bound_ok, duration_ok))

    if not report.passed:
        logger.warning(f"mode-mismatch audit: {len(report.violations)} of {len(report.intervals)} intervals violate")
    return report


@dataclass
class LyapunovReport:
    v: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    increases: List[int] = field(default_factory=list)
    gain_violations: List[int] = field(default_factory=list)
    noise_mode: bool = False

    @property
    def passed(self) -> bool:
        return self.noise_mode or not (self.increases or self.gain_violations)

    def summary(self) -> Dict[str, object]:
        return {
            "samples": int(self.v.size),
            "V_initial": float(self.v[0]) if self.v.size else float("nan"),
            "V_final": float(self.v[-1]) if self.v.size else float("nan"),
            "increases": len(self.increases),
            "gain_violations": len(self.gain_violations),
            "noise_mode": self.noise_mode,
            "passed": self.passed,
        }


def lyapunov_audit(traj: HybridTrajectory, lp: StandardLP, params: Optional[LagrangianParams] = None,
                   noise_mode: Optional[bool] = None) -> LyapunovReport:
    """
    Flag increases of V beyond 1e-7 (1 + V(0)) between consecutive samples and
    check that components entering sigma do so with f_i close to zero.

    In noise mode excursions are reported but the audit still passes.
    """
    noise_mode = traj.noise_enabled if noise_mode is None else noise_mode
    if traj.diagnostics is None or (params is not None and params.saddle is not traj.saddle):
        traj.attach_diagnostics(lp, params.saddle if params is not None else traj.saddle)
    d = traj.diagnostics
    v = d.v
    report = LyapunovReport(v=v, v1=d.v1, v2=d.v2, noise_mode=noise_mode)
    if v.size == 0 or np.isnan(v).all():
        return report

    tol = MONOTONE_TOL * (1.0 + abs(v[0]))
    rises = np.flatnonzero(np.diff(v) > tol) + 1
    report.increases = rises.tolist()

    X = traj.X
    # entries through f crossing zero while x_i stays clamped
    gained = d.sigma[1:] & ~d.sigma[:-1] & (X[1:] == 0.0)
    for k, i in zip(*np.nonzero(gained)):
        row = d.f[k + 1]
        if abs(row[i]) > GAIN_TOL * (1.0 + np.abs(row).max(initial=0.0)):
            report.gain_violations.append(int(k + 1))

    if report.increases and not noise_mode:
        logger.warning(f"lyapunov audit: V increased at {len(report.increases)} sample(s)")
    elif report.increases:
        logger.info(f"lyapunov audit: {len(report.increases)} excursion(s) under broadcast noise")
    return report


@dataclass
class LieSampleSummary:
    checked: int = 0
    held: int = 0
    skipped: int = 0
    worst_excess: float = 0.0

    @property
    def hold_rate(self) -> float:
        return self.held / self.checked if self.checked else float("nan")

    def as_dict(self) -> Dict[str, float]:
        return {
            "checked": self.checked,
            "held": self.held,
            "skipped": self.skipped,
            "hold_rate": self.hold_rate,
            "worst_excess": self.worst_excess,
        }


def sample_lie_bounds(traj: HybridTrajectory, lp: StandardLP, params: LagrangianParams,
                      stride: int = 1) -> LieSampleSummary:
    """Run lie_derivative_check on flow samples whose active sets meet its preconditions."""
    summary = LieSampleSummary()
    for sample in traj.samples[::max(1, stride)]:
        if sample.kind is SampleKind.JUMP:
            continue
        try:
            report = lie_derivative_check(lp, params, PrimalDualPoint(sample.x, sample.z),
                                          PrimalDualPoint(sample.x_hat, sample.z_hat))
        except ModePreconditionError:
            summary.skipped += 1
            continue
        summary.checked += 1
        summary.held += int(report.holds)
        summary.worst_excess = max(summary.worst_excess, report.excess)
    return summary
