"""
Centralized Triggering

A single coordinator watches the whole network and orders a synchronized
broadcast by every agent when the state enters any of
    T_e:     error terms dominate the guaranteed decrease
    T_sigma: the true active set differs from the broadcast one
    T_0:     some x_i reached zero while its broadcast value is positive
"""

from typing import Optional

import numpy as np

from src.dynamics.flow import PrimalDualPoint, active_mask, flow_f
from src.lp.problem import StandardLP
from src.triggers.state import BroadcastRates, BroadcastState, broadcast_rates
from src.triggers.verdict import Cause, TriggerVerdict


def error_trigger_margin(rates: BroadcastRates, e_x: np.ndarray, e_z: np.ndarray) -> float:
    """
    (20|e_z|^2 + 40|e_x|^2) - (1/8 |A x_hat - b|^2 + 1/4 f_hat^T I f_hat).

    T_e fires when this is >= 0 and the broadcast state is not an equilibrium.
    """
    fs = rates.f_hat[rates.sigma_hat]
    g = rates.g_hat
    return float(20.0 * e_z @ e_z + 40.0 * e_x @ e_x - (0.125 * g @ g + 0.25 * fs @ fs))


def broadcast_at_equilibrium(rates: BroadcastRates) -> bool:
    return not (np.any(rates.g_hat != 0.0) or np.any(rates.f_hat[rates.sigma_hat] != 0.0))


def centralized_check(lp: StandardLP, pt: PrimalDualPoint, hat: BroadcastState,
                      rates: Optional[BroadcastRates] = None) -> TriggerVerdict:
    """
    Evaluate the centralized trigger set.

    Args:
        lp: Flow problem
        pt: True state (x, z)
        hat: Broadcast state
        rates: Precomputed broadcast_rates(lp, hat), if available

    Returns:
        Verdict firing every agent (n + m) with the union of active causes, or
        an empty verdict
    """
    if rates is None:
        rates = broadcast_rates(lp, hat)
    causes = set()

    e_x = pt.x - hat.x_sent
    e_z = pt.z - hat.z_sent
    if not broadcast_at_equilibrium(rates) and error_trigger_margin(rates, e_x, e_z) >= 0.0:
        causes.add(Cause.E)
    if not np.array_equal(active_mask(pt.x, flow_f(lp, pt)), rates.sigma_hat):
        causes.add(Cause.SIGMA)
    if np.any((hat.x_hat > 0.0) & (pt.x == 0.0)):
        causes.add(Cause.ZERO)

    return TriggerVerdict.everyone(lp.n + lp.m, causes)
