"""
Trigger Verdicts

Which agents must broadcast now, and why.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Mapping

import numpy as np


class Cause(str, Enum):
    E = "E"
    ZERO = "ZERO"
    SIGMA = "SIGMA"
    REQUEST = "REQUEST"
    SEND = "SEND"
    SYNCH = "SYNCH"


_ORDER = {cause: k for k, cause in enumerate(Cause)}


@dataclass(frozen=True)
class TriggerVerdict:
    """Fired agents mapped to the causes that fired them."""

    causes: Mapping[int, FrozenSet[Cause]] = field(default_factory=dict)

    @property
    def fired(self) -> FrozenSet[int]:
        return frozenset(self.causes)

    def __bool__(self) -> bool:
        return bool(self.causes)

    def has(self, agent: int, cause: Cause) -> bool:
        return cause in self.causes.get(agent, frozenset())

    def all_causes(self) -> FrozenSet[Cause]:
        out = set()
        for c in self.causes.values():
            out |= c
        return frozenset(out)

    def codes(self, agent: int) -> str:
        """Comma-joined cause codes in canonical order."""
        return ",".join(c.value for c in sorted(self.causes.get(agent, ()), key=_ORDER.__getitem__))

    def merge(self, other: "TriggerVerdict") -> "TriggerVerdict":
        merged: Dict[int, FrozenSet[Cause]] = dict(self.causes)
        for agent, c in other.causes.items():
            merged[agent] = merged.get(agent, frozenset()) | c
        return TriggerVerdict(merged)

    @classmethod
    def from_masks(cls, masks: Mapping[Cause, np.ndarray]) -> "TriggerVerdict":
        collected: Dict[int, set] = {}
        for cause, mask in masks.items():
            for agent in np.flatnonzero(mask):
                collected.setdefault(int(agent), set()).add(cause)
        return cls({agent: frozenset(c) for agent, c in sorted(collected.items())})

    @classmethod
    def everyone(cls, n_agents: int, causes: Iterable[Cause]) -> "TriggerVerdict":
        causes = frozenset(causes)
        if not causes:
            return cls()
        return cls({agent: causes for agent in range(n_agents)})
