"""
Distributed Triggering

Each agent decides from locally available quantities whether to broadcast:
    E:       own error large relative to its broadcast flow component
    ZERO:    own x_i hit zero while the broadcast value is positive (real only)
    REQUEST: x_i sits at zero for tau_i since the last own broadcast (real only)
    SEND:    a neighbor requested fresh values
    SYNCH:   a neighbor's broadcast arrived within r_min_i of the own one
"""

from typing import Dict, Optional

import numpy as np

from src.lp.problem import StandardLP
from src.network.topology import AgentGraph
from src.triggers.config import TriggerConfig
from src.triggers.state import BroadcastRates, NetworkState, broadcast_rates
from src.triggers.verdict import Cause, TriggerVerdict


def cause_masks(lp: StandardLP, cfg: TriggerConfig, state: NetworkState,
                rates: BroadcastRates) -> Dict[Cause, np.ndarray]:
    """Boolean masks over all n + m agents, one per cause."""
    n, size = lp.n, lp.n + lp.m
    hat, book = state.hat, state.book
    e_x, e_z = state.e_x, state.e_z
    f_hat, g_hat = rates.f_hat, rates.g_hat

    error = np.zeros(size, dtype=bool)
    error[:n] = (f_hat != 0.0) & (e_x * e_x >= cfg.mu[:n] * f_hat * f_hat)
    error[n:] = (g_hat != 0.0) & (e_z * e_z >= cfg.mu[n:] * g_hat * g_hat)

    zero = np.zeros(size, dtype=bool)
    zero[:n] = (hat.x_hat > 0.0) & (state.x == 0.0)

    request = np.zeros(size, dtype=bool)
    request[:n] = (state.x == 0.0) & (book.s[:n] >= cfg.tau[:n])

    send = np.zeros(size, dtype=bool)
    for receiver in book.requested():
        send[receiver] = True

    synch = (book.r >= 0.0) & (book.r <= cfg.r_min)

    return {
        Cause.E: error,
        Cause.ZERO: zero,
        Cause.REQUEST: request,
        Cause.SEND: send,
        Cause.SYNCH: synch,
    }


def distributed_check(lp: StandardLP, graph: AgentGraph, cfg: TriggerConfig, state: NetworkState,
                      rates: Optional[BroadcastRates] = None) -> TriggerVerdict:
    """
    Per-agent trigger evaluation; a pure function of the state.

    Args:
        lp: Flow problem
        graph: Agent graph (neighbor sets)
        cfg: Validated trigger parameters
        state: Extended network state
        rates: Precomputed broadcast_rates(lp, state.hat), if available

    Returns:
        Verdict listing each fired agent with its causes
    """
    if rates is None:
        rates = broadcast_rates(lp, state.hat)
    return TriggerVerdict.from_masks(cause_masks(lp, cfg, state, rates))
