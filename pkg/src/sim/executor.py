"""
Hybrid Executor

Alternates exact affine flows and atomic broadcast jumps. Flows advance to the
closed-form next event root, capped by the diagnostic sampling cadence, the
next f-breakpoint and the time horizon.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.dynamics.lyapunov import SaddleReference
from src.errors import DivergenceError, PreconditionError, ZenoAbortError
from src.lp.problem import StandardLP
from src.network.topology import AgentGraph
from src.sim.events import GUARD, EventForecast, forecast_events
from src.sim.trajectory import HybridTime, HybridTrajectory, SampleKind
from src.triggers import TriggerEngine
from src.triggers.config import TriggerConfig
from src.triggers.state import Bookkeeping, BroadcastRates, NetworkState

logger = logging.getLogger(__name__)

ZENO_GAP = 1e-9
ZENO_STREAK = 100
MAX_MIN_STEP = 1e-6
DIVERGENCE_LIMIT = 1e12
CLAMP_TOL = 1e-9
CADENCE_DIVISOR = 2000


@dataclass(frozen=True)
class NoiseSpec:
    """Additive normal noise on broadcast values; true states are never perturbed."""

    enabled: bool = False
    std_dev: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.std_dev < 0.0:
            raise PreconditionError(f"noise std_dev must be nonnegative, got {self.std_dev}")

    def generator(self) -> Optional[np.random.Generator]:
        if not self.enabled or self.std_dev == 0.0:
            return None
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class Horizon:
    t_max: float
    j_max: int

    def __post_init__(self):
        if not self.t_max > 0.0:
            raise PreconditionError(f"t_max must be positive, got {self.t_max}")
        if self.j_max < 0:
            raise PreconditionError(f"j_max must be nonnegative, got {self.j_max}")


class ZenoMonitor:
    """Counts consecutive inter-jump gaps below ZENO_GAP."""

    def __init__(self, gap: float = ZENO_GAP, streak: int = ZENO_STREAK):
        self.gap = gap
        self.required = streak
        self.last_time: Optional[float] = None
        self.streak = 0
        self.suspected = False

    def add(self, jump_time: float) -> None:
        last_time, self.last_time = self.last_time, jump_time
        if last_time is not None and jump_time - last_time < self.gap:
            self.streak += 1
        else:
            self.streak = 0
        if self.streak >= self.required:
            self.suspected = True


def default_cadence(t_max: float, cfg: TriggerConfig) -> float:
    """max(horizon / 2000, smallest tau / 4)."""
    tau_min = float(cfg.tau.min(initial=np.inf)) if cfg.tau.size else np.inf
    cadence = t_max / CADENCE_DIVISOR
    if np.isfinite(tau_min):
        cadence = max(cadence, tau_min / 4.0)
    return cadence


def _advance(state: NetworkState, rates: BroadcastRates, cfg: TriggerConfig,
             forecast: EventForecast, step: float) -> NetworkState:
    """Flow by `step`, snapping zero-crossings of x to 0 and clocks to tau."""
    x = state.x + rates.x_dot * step
    x[forecast.zero_crossings <= step + GUARD] = 0.0
    undershoot = np.flatnonzero(x < -CLAMP_TOL)
    if undershoot.size:
        logger.warning(f"clamping x at agents {undershoot.tolist()} from {x[undershoot].min():.3g}: "
                       f"zero-crossing missed by the event forecast")
    x = np.maximum(x, 0.0)
    z = state.z + rates.z_dot * step
    s = np.minimum(state.book.s + step, cfg.tau)
    s[cfg.tau - s <= GUARD] = cfg.tau[cfg.tau - s <= GUARD]
    return NetworkState(x, z, state.hat, Bookkeeping(s, state.book.r.copy(), state.book.q))


def _check_finite(state: NetworkState, t: float, traj: HybridTrajectory) -> None:
    values = np.concatenate((state.x, state.z))
    if not np.all(np.isfinite(values)) or np.abs(values).max(initial=0.0) > DIVERGENCE_LIMIT:
        raise DivergenceError(f"state left the finite range at t={t:.6g}", traj)


def _validate_init(lp: StandardLP, init: NetworkState) -> None:
    lp.check_primal(init.x, "init.x")
    lp.check_dual(init.z, "init.z")
    if init.x.size and init.x.min() < 0.0:
        raise PreconditionError("initial primal state must be nonnegative")
    if not (np.array_equal(init.hat.x_hat, init.x) and np.array_equal(init.hat.z_hat, init.z)):
        raise PreconditionError("simulation must start from a synchronized broadcast")


def simulate(lp: StandardLP, graph: AgentGraph, cfg: TriggerConfig, init: NetworkState, horizon: Horizon,
             noise: Optional[NoiseSpec] = None, saddle: Optional[SaddleReference] = None,
             sample_every: Optional[float] = None) -> HybridTrajectory:
    """
    Run the hybrid system from a synchronized initial state.

    Args:
        lp: Flow problem (gamma already folded into the cost)
        graph: Agent graph of lp
        cfg: Validated trigger configuration
        init: Initial extended state with x_hat = x and z_hat = z
        horizon: Continuous-time and jump budgets
        noise: Broadcast noise model (None for exact broadcasts)
        saddle: Saddle reference for V1 (V1 is NaN without one)
        sample_every: Diagnostic sampling cadence (default from horizon and tau)

    Returns:
        HybridTrajectory with diagnostics attached and persistence classified

    Raises:
        PreconditionError: if init is not a nonnegative synchronized state
        ZenoAbortError: if j_max is reached while Zeno behavior is suspected
        DivergenceError: if the state leaves the finite range
    """
    _validate_init(lp, init)
    noise = noise or NoiseSpec()
    engine = TriggerEngine(lp, graph, cfg)
    rng = noise.generator()
    noise_std = noise.std_dev if rng is not None else 0.0
    cadence = sample_every if sample_every is not None else default_cadence(horizon.t_max, cfg)
    if not cadence > 0.0:
        raise PreconditionError(f"sample cadence must be positive, got {cadence}")

    traj = HybridTrajectory(n=lp.n, m=lp.m, noise_enabled=rng is not None)
    state = init.copy()
    t, j = 0.0, 0
    traj.record(t, j, state, SampleKind.INIT)
    next_sample = cadence
    min_step = GUARD
    expecting_event = False
    zeno = ZenoMonitor()

    logger.info(f"simulate: mode={cfg.mode.value}, n={lp.n}, m={lp.m}, t_max={horizon.t_max:g}, "
                f"j_max={horizon.j_max}, noise_std={noise_std:g}")

    while True:
        verdict = engine.check(state)
        if verdict:
            if j >= horizon.j_max:
                traj.truncated = True
                break
            state = engine.jump(state, verdict, rng=rng, noise_std=noise_std)
            j += 1
            fired = np.zeros(graph.n_agents, dtype=bool)
            fired[sorted(verdict.fired)] = True
            traj.log_jump(t, j, {agent: verdict.codes(agent) for agent in verdict.fired})
            traj.record(t, j, state, SampleKind.JUMP, fired)
            zeno.add(t)
            min_step = GUARD
            expecting_event = False
            traj.final_dt_inf = False
            continue

        if expecting_event:
            # root reached but the predicate did not flip; step further next time
            min_step = min(2.0 * min_step, MAX_MIN_STEP)
            logger.debug(f"event root at t={t:.12g} did not fire, min_step -> {min_step:g}")
        if t >= horizon.t_max:
            break

        rates = engine.rates(state)
        forecast = forecast_events(lp, graph, cfg, state, rates)
        remaining = horizon.t_max - t
        target = min(forecast.dt, next_sample - t, forecast.breakpoint, remaining)
        step = min(max(target, min_step), remaining)
        expecting_event = step >= forecast.dt
        traj.final_dt_inf = bool(np.isinf(forecast.dt))

        state = _advance(state, rates, cfg, forecast, step)
        t = horizon.t_max if step == remaining else t + step
        _check_finite(state, t, traj)

        if t >= next_sample - GUARD:
            traj.record(t, j, state, SampleKind.CADENCE)
            while next_sample <= t + GUARD:
                next_sample += cadence
        elif np.isfinite(forecast.breakpoint) and step >= forecast.breakpoint:
            traj.record(t, j, state, SampleKind.BREAKPOINT)

    if traj.final.time != HybridTime(t, j):
        traj.record(t, j, state, SampleKind.END)
    traj.zeno_suspected = zeno.suspected
    traj.attach_diagnostics(lp, saddle)
    traj.classify_persistence()

    logger.info(f"simulate: done at t={t:.6g}, jumps={j}, broadcasts={len(traj.events)}, "
                f"persistence={traj.persistence}")
    if traj.truncated and traj.zeno_suspected:
        raise ZenoAbortError(f"jump budget {horizon.j_max} exhausted with Zeno behavior suspected at t={t:.6g}",
                             traj)
    if traj.truncated:
        logger.warning(f"jump budget {horizon.j_max} exhausted at t={t:.6g}")
    return traj
