"""
Extended Network State

The hybrid state carried by the executor: true primal-dual values, the last
broadcast values and the per-agent bookkeeping clocks and request flags.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Tuple

import numpy as np

from src.dynamics.flow import PrimalDualPoint, active_mask, clamp_rates, flow_f
from src.errors import PreconditionError
from src.lp.problem import StandardLP


@dataclass
class BroadcastState:
    """
    Last broadcast values.

    x_hat/z_hat are what receivers hold and what drives the dynamics. The
    sender-side record x_sent/z_sent is what each agent measures its own error
    against; the two differ only when broadcasts are corrupted by noise.
    """

    x_hat: np.ndarray
    z_hat: np.ndarray
    x_sent: Optional[np.ndarray] = None
    z_sent: Optional[np.ndarray] = None

    def __post_init__(self):
        self.x_hat = np.array(self.x_hat, dtype=float).reshape(-1)
        self.z_hat = np.array(self.z_hat, dtype=float).reshape(-1)
        self.x_sent = self.x_hat.copy() if self.x_sent is None else np.array(self.x_sent, dtype=float).reshape(-1)
        self.z_sent = self.z_hat.copy() if self.z_sent is None else np.array(self.z_sent, dtype=float).reshape(-1)
        if self.x_hat.size and self.x_hat.min() < 0.0:
            raise PreconditionError("broadcast primal values must be nonnegative")

    def as_point(self) -> PrimalDualPoint:
        return PrimalDualPoint(self.x_hat, self.z_hat)

    def copy(self) -> "BroadcastState":
        return BroadcastState(self.x_hat.copy(), self.z_hat.copy(), self.x_sent.copy(), self.z_sent.copy())


@dataclass
class Bookkeeping:
    """
    Per-agent clocks and request flags over all n + m agents.

    s: time since own last broadcast, saturating at tau
    r: time between own last broadcast and the latest received one, -1 for none
    q: set of (receiver, requester) pairs with a pending request
    """

    s: np.ndarray
    r: np.ndarray
    q: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)

    @classmethod
    def fresh(cls, n_agents: int) -> "Bookkeeping":
        return cls(np.zeros(n_agents), -np.ones(n_agents), frozenset())

    def copy(self) -> "Bookkeeping":
        return Bookkeeping(self.s.copy(), self.r.copy(), self.q)

    def requested(self) -> FrozenSet[int]:
        """Agents with at least one inbound request."""
        return frozenset(receiver for receiver, _ in self.q)


@dataclass
class NetworkState:
    """Extended hybrid state (x, z, s, q, r, x_hat, z_hat)."""

    x: np.ndarray
    z: np.ndarray
    hat: BroadcastState
    book: Bookkeeping

    @property
    def point(self) -> PrimalDualPoint:
        return PrimalDualPoint(self.x, self.z)

    @property
    def e_x(self) -> np.ndarray:
        return self.x - self.hat.x_sent

    @property
    def e_z(self) -> np.ndarray:
        return self.z - self.hat.z_sent

    def copy(self) -> "NetworkState":
        return NetworkState(self.x.copy(), self.z.copy(), self.hat.copy(), self.book.copy())


def synchronized_state(x: np.ndarray, z: np.ndarray) -> NetworkState:
    """
    State right after every agent broadcast its exact value.

    Raises:
        PreconditionError: if x has a negative entry
    """
    x = np.array(x, dtype=float).reshape(-1)
    z = np.array(z, dtype=float).reshape(-1)
    if x.size and x.min() < 0.0:
        raise PreconditionError("initial primal state must be nonnegative")
    return NetworkState(x, z, BroadcastState(x.copy(), z.copy()), Bookkeeping.fresh(x.size + z.size))


@dataclass(frozen=True, eq=False)
class BroadcastRates:
    """Quantities fixed between jumps: f(x_hat, z_hat), its active set and the flow rates."""

    f_hat: np.ndarray
    sigma_hat: np.ndarray
    x_dot: np.ndarray
    z_dot: np.ndarray

    @property
    def g_hat(self) -> np.ndarray:
        """A x_hat - b (equal to z_dot)."""
        return self.z_dot


def broadcast_rates(lp: StandardLP, hat: BroadcastState) -> BroadcastRates:
    f_hat = flow_f(lp, hat.as_point())
    return BroadcastRates(
        f_hat=f_hat,
        sigma_hat=active_mask(hat.x_hat, f_hat),
        x_dot=clamp_rates(hat.x_hat, f_hat),
        z_dot=lp.A @ hat.x_hat - lp.b,
    )
