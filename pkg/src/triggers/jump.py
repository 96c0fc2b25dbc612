"""
Jump Map

Applies one atomic broadcast round: every fired agent transmits its current
value, resets its clocks, and posts or services neighbor requests.
"""

import logging
from typing import Optional

import numpy as np

from src.errors import PreconditionError
from src.network.topology import AgentGraph
from src.triggers.config import TriggerConfig
from src.triggers.state import Bookkeeping, BroadcastState, NetworkState
from src.triggers.verdict import Cause, TriggerVerdict

logger = logging.getLogger(__name__)


def _broadcast(state: NetworkState, fired: np.ndarray, rng: Optional[np.random.Generator],
               noise_std: float) -> BroadcastState:
    n = state.x.size
    hat = state.hat.copy()
    real = fired[fired < n]
    virtual = fired[fired >= n] - n

    hat.x_sent[real] = state.x[real]
    hat.z_sent[virtual] = state.z[virtual]

    if rng is not None and noise_std > 0.0:
        # one draw per fired agent, ascending agent order
        draws = rng.normal(0.0, noise_std, size=fired.size)
        k = real.size
        hat.x_hat[real] = np.maximum(0.0, state.x[real] + draws[:k])
        hat.z_hat[virtual] = state.z[virtual] + draws[k:]
    else:
        hat.x_hat[real] = state.x[real]
        hat.z_hat[virtual] = state.z[virtual]
    return hat


def _update_book(graph: AgentGraph, book: Bookkeeping, verdict: TriggerVerdict) -> Bookkeeping:
    fired = verdict.fired
    s_prev = book.s
    s = book.s.copy()
    r = book.r.copy()

    for i in sorted(fired):
        for j in graph.neighbors[i]:
            if j not in fired and s_prev[j] > 0.0:
                r[j] = s_prev[j]
    idx = np.fromiter(sorted(fired), dtype=int)
    s[idx] = 0.0
    r[idx] = -1.0

    serviced = {i for i in fired if verdict.has(i, Cause.SEND)}
    q = {pair for pair in book.q if pair[0] not in serviced}
    for i in fired:
        if verdict.has(i, Cause.REQUEST):
            q.update((j, i) for j in graph.neighbors[i])
    return Bookkeeping(s, r, frozenset(q))


def apply_jump(graph: AgentGraph, cfg: TriggerConfig, state: NetworkState, verdict: TriggerVerdict,
               rng: Optional[np.random.Generator] = None, noise_std: float = 0.0) -> NetworkState:
    """
    Apply the jump map for the fired agents of a verdict.

    Args:
        graph: Agent graph
        cfg: Trigger parameters (mode selects the bookkeeping rules)
        state: Pre-jump state
        verdict: Non-empty trigger verdict
        rng: Generator for broadcast noise (None for exact broadcasts)
        noise_std: Standard deviation of the additive broadcast noise

    Returns:
        Post-jump state; x and z are unchanged

    Raises:
        PreconditionError: if no agent fired
    """
    if not verdict:
        raise PreconditionError("apply_jump requires at least one fired agent")

    fired = np.fromiter(sorted(verdict.fired), dtype=int)
    hat = _broadcast(state, fired, rng, noise_std)
    book = _update_book(graph, state.book, verdict) if cfg.distributed else Bookkeeping.fresh(graph.n_agents)

    logger.debug(f"jump: {fired.size} agent(s) fired, causes={sorted(c.value for c in verdict.all_causes())}")
    return NetworkState(state.x.copy(), state.z.copy(), hat, book)
