"""
Trigger Engine

Dispatches trigger evaluation and the jump map by mode so the executor never
branches on centralized vs. distributed itself.
"""

import logging
from typing import Optional

import numpy as np

from src.lp.problem import StandardLP
from src.network.topology import AgentGraph
from src.triggers.centralized import centralized_check
from src.triggers.config import (
    ConfigViolation,
    TriggerConfig,
    TriggerMode,
    default_config,
    ensure_valid,
    tau_bounds,
    validate_config,
)
from src.triggers.distributed import distributed_check
from src.triggers.jump import apply_jump
from src.triggers.state import (
    Bookkeeping,
    BroadcastRates,
    BroadcastState,
    NetworkState,
    broadcast_rates,
    synchronized_state,
)
from src.triggers.verdict import Cause, TriggerVerdict

logger = logging.getLogger(__name__)


class TriggerEngine:
    """
    Binds a problem, its agent graph and a validated configuration.

    Broadcast rates are constant between jumps, so the engine caches them
    keyed on the identity of the broadcast record.
    """

    def __init__(self, lp: StandardLP, graph: AgentGraph, cfg: TriggerConfig):
        self.lp = lp
        self.graph = graph
        self.cfg = ensure_valid(graph, cfg)
        self._cached_hat: Optional[BroadcastState] = None
        self._cached_rates: Optional[BroadcastRates] = None

    @property
    def mode(self) -> TriggerMode:
        return self.cfg.mode

    def rates(self, state: NetworkState) -> BroadcastRates:
        if state.hat is not self._cached_hat:
            self._cached_rates = broadcast_rates(self.lp, state.hat)
            self._cached_hat = state.hat
        return self._cached_rates

    def check(self, state: NetworkState) -> TriggerVerdict:
        """Evaluate the trigger set of the configured mode on the state."""
        rates = self.rates(state)
        if self.cfg.distributed:
            return distributed_check(self.lp, self.graph, self.cfg, state, rates)
        return centralized_check(self.lp, state.point, state.hat, rates)

    def jump(self, state: NetworkState, verdict: TriggerVerdict,
             rng: Optional[np.random.Generator] = None, noise_std: float = 0.0) -> NetworkState:
        return apply_jump(self.graph, self.cfg, state, verdict, rng=rng, noise_std=noise_std)


__all__ = [
    "Bookkeeping",
    "BroadcastRates",
    "BroadcastState",
    "Cause",
    "ConfigViolation",
    "NetworkState",
    "TriggerConfig",
    "TriggerEngine",
    "TriggerMode",
    "TriggerVerdict",
    "apply_jump",
    "broadcast_rates",
    "centralized_check",
    "default_config",
    "distributed_check",
    "ensure_valid",
    "synchronized_state",
    "tau_bounds",
    "validate_config",
]
