"""
Event Detection

Between jumps the broadcast values are frozen, so x, z and s move along
straight lines. Every trigger condition is then a polynomial of degree at most
two in the elapsed time and its first root is available in closed form.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Set, Tuple

import numpy as np

from src.dynamics.flow import flow_f
from src.lp.problem import StandardLP
from src.network.topology import AgentGraph
from src.triggers.config import TriggerConfig
from src.triggers.state import BroadcastRates, NetworkState, broadcast_rates
from src.triggers.verdict import Cause, TriggerVerdict

GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class EventForecast:
    """
    Result of the root search.

    dt: time to the first trigger event (inf when none is ahead)
    imminent: agents and causes expected to fire at dt
    zero_crossings: per real agent, time at which x_i reaches zero (inf if never)
    breakpoint: first zero-crossing of a clamped f_i(x, z) that is not itself
        a trigger (distributed mode), inf if none
    """

    dt: float
    imminent: TriggerVerdict
    zero_crossings: np.ndarray
    breakpoint: float = np.inf
    roots: Dict[Cause, np.ndarray] = field(default_factory=dict)


def flow_state(state: NetworkState, rates: BroadcastRates, cfg: TriggerConfig, t: float) -> NetworkState:
    """Advance the state by t along the frozen flow (no snapping)."""
    book = state.book.copy()
    book.s = np.minimum(book.s + t, cfg.tau)
    return NetworkState(state.x + rates.x_dot * t, state.z + rates.z_dot * t, state.hat, book)


def f_rate(lp: StandardLP, rates: BroadcastRates) -> np.ndarray:
    """Time derivative of f(x, z) along the flow: -x_dot - A^T z_dot - A^T A x_dot."""
    A = lp.A
    return -rates.x_dot - A.T @ rates.z_dot - A.T @ (A @ rates.x_dot)


def _linear_error_roots(e0: np.ndarray, v: np.ndarray, level: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """First t > 0 with (e0 + v t)^2 >= mu level^2; inf where the level is zero or v is."""
    out = np.full(e0.size, np.inf)
    ok = (level != 0.0) & (v != 0.0)
    bound = np.sqrt(mu[ok]) * np.abs(level[ok])
    out[ok] = (np.sign(v[ok]) * bound - e0[ok]) / v[ok]
    return out


def _zero_roots(state: NetworkState, rates: BroadcastRates) -> np.ndarray:
    out = np.full(state.x.size, np.inf)
    falling = (state.hat.x_hat > 0.0) & (rates.x_dot < 0.0) & (state.x > 0.0)
    out[falling] = state.x[falling] / -rates.x_dot[falling]
    return out


def _crossing_roots(f: np.ndarray, fdot: np.ndarray, clamped: np.ndarray) -> np.ndarray:
    """Sign changes of f_i on clamped components: gains (f < 0 rising) and losses (f >= 0 falling)."""
    out = np.full(f.size, np.inf)
    gain = clamped & (f < 0.0) & (fdot > 0.0)
    loss = clamped & (f >= 0.0) & (fdot < 0.0)
    out[gain] = -f[gain] / fdot[gain]
    out[loss] = f[loss] / -fdot[loss]
    return out


def _quadratic_root(a: float, b: float, c: float) -> float:
    """Positive root of a t^2 + 2 b t + c = 0 for a > 0, c < 0, in cancellation-free form."""
    disc = np.sqrt(b * b - a * c)
    if b <= 0.0:
        return float((disc - b) / a)
    return float(-c / (b + disc))


def _centralized_error_root(state: NetworkState, rates: BroadcastRates) -> float:
    g = rates.g_hat
    fs = rates.f_hat[rates.sigma_hat]
    if not (np.any(g != 0.0) or np.any(fs != 0.0)):
        return np.inf
    e_x, e_z = state.e_x, state.e_z
    xd, zd = rates.x_dot, rates.z_dot
    a = 40.0 * xd @ xd + 20.0 * zd @ zd
    b = 40.0 * e_x @ xd + 20.0 * e_z @ zd
    c = 40.0 * e_x @ e_x + 20.0 * e_z @ e_z - (0.125 * g @ g + 0.25 * fs @ fs)
    if a <= 0.0:
        return np.inf
    if c >= 0.0:
        return 0.0
    return _quadratic_root(float(a), float(b), float(c))


def _collect(roots: Dict[Cause, np.ndarray], offset: int, horizon: float,
             into: Dict[int, Set[Cause]]) -> None:
    for cause, arr in roots.items():
        for k in np.flatnonzero(arr <= horizon):
            into.setdefault(int(k) + offset, set()).add(cause)


def forecast_events(lp: StandardLP, graph: AgentGraph, cfg: TriggerConfig, state: NetworkState,
                    rates: Optional[BroadcastRates] = None) -> EventForecast:
    """
    Closed-form search for the next trigger event.

    Args:
        lp: Flow problem
        graph: Agent graph
        cfg: Trigger parameters
        state: Current state; no trigger may be firing
        rates: Precomputed broadcast_rates, if available

    Returns:
        EventForecast with dt >= GUARD (or inf) and the imminent verdict
    """
    if rates is None:
        rates = broadcast_rates(lp, state.hat)
    n, size = lp.n, lp.n + lp.m
    zero = _zero_roots(state, rates)

    clamped = (state.x == 0.0) & (rates.x_dot == 0.0)
    f = flow_f(lp, state.point)
    crossings = _crossing_roots(f, f_rate(lp, rates), clamped)

    if cfg.distributed:
        real = {
            Cause.E: _linear_error_roots(state.e_x, rates.x_dot, rates.f_hat, cfg.mu[:n]),
            Cause.ZERO: zero,
        }
        request = np.full(n, np.inf)
        waiting = clamped & (state.book.s[:n] < cfg.tau[:n])
        request[waiting] = cfg.tau[:n][waiting] - state.book.s[:n][waiting]
        real[Cause.REQUEST] = request
        virtual = {Cause.E: _linear_error_roots(state.e_z, rates.z_dot, rates.g_hat, cfg.mu[n:])}

        first = min((float(arr.min(initial=np.inf)) for arr in (*real.values(), *virtual.values())),
                    default=np.inf)
        if not np.isfinite(first):
            return EventForecast(np.inf, TriggerVerdict(), zero, _first_breakpoint(crossings), real)
        dt = max(first, GUARD)
        collected: Dict[int, Set[Cause]] = {}
        _collect(real, 0, dt + GUARD, collected)
        _collect(virtual, n, dt + GUARD, collected)
        imminent = TriggerVerdict({k: frozenset(v) for k, v in sorted(collected.items())})
        return EventForecast(dt, imminent, zero, _first_breakpoint(crossings), real)

    central = {
        Cause.E: np.array([_centralized_error_root(state, rates)]),
        Cause.SIGMA: np.array([crossings.min(initial=np.inf)]),
        Cause.ZERO: np.array([zero.min(initial=np.inf)]),
    }
    first = min(float(arr[0]) for arr in central.values())
    if not np.isfinite(first):
        return EventForecast(np.inf, TriggerVerdict(), zero, np.inf, central)
    dt = max(first, GUARD)
    causes = [cause for cause, arr in central.items() if arr[0] <= dt + GUARD]
    return EventForecast(dt, TriggerVerdict.everyone(size, causes), zero, np.inf, central)


def _first_breakpoint(crossings: np.ndarray) -> float:
    positive = crossings[crossings > GUARD]
    return float(positive.min()) if positive.size else np.inf


def next_event_time(lp: StandardLP, graph: AgentGraph, cfg: TriggerConfig,
                    state: NetworkState) -> Tuple[float, TriggerVerdict]:
    """(dt, imminent verdict) for the next trigger event; (inf, empty) at equilibrium."""
    forecast = forecast_events(lp, graph, cfg, state)
    return forecast.dt, forecast.imminent
