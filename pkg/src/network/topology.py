"""
Agent Communication Graph

Real agents own primal variables x_i (indices 0..n-1); virtual agents own the
dual component z_l of constraint l (index n + l). Every agent that appears in
a constraint, together with that constraint's virtual agent, forms a clique.
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from src.lp.problem import StandardLP


@dataclass(frozen=True)
class AgentGraph:
    """
    Undirected communication graph over n real and m virtual agents.

    Neighbor tuples are sorted ascending and never contain the agent itself.
    """

    n_real: int
    n_virtual: int
    neighbors: Tuple[Tuple[int, ...], ...]

    @property
    def n_agents(self) -> int:
        return self.n_real + self.n_virtual

    def is_virtual(self, agent: int) -> bool:
        return agent >= self.n_real

    def real_neighbors(self, agent: int) -> Tuple[int, ...]:
        return tuple(j for j in self.neighbors[agent] if j < self.n_real)

    def virtual_neighbors(self, agent: int) -> Tuple[int, ...]:
        return tuple(j for j in self.neighbors[agent] if j >= self.n_real)

    def degree(self, agent: int) -> int:
        return len(self.neighbors[agent])

    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=int)

    def label(self, agent: int) -> str:
        """x<i> for real agents, z<l> for virtual ones."""
        return f"z{agent - self.n_real}" if self.is_virtual(agent) else f"x{agent}"

    def virtual_adjacency(self) -> Dict[int, List[int]]:
        """Constraint-level adjacency: l ~ l' iff the two constraints share a variable."""
        adjacency: Dict[int, List[int]] = {}
        for l in range(self.n_virtual):
            own = self.n_real + l
            shared = set()
            for i in self.real_neighbors(own):
                shared.update(v - self.n_real for v in self.virtual_neighbors(i))
            shared.discard(l)
            adjacency[l] = sorted(shared)
        return adjacency


def build_graph(lp: StandardLP) -> AgentGraph:
    """
    Derive the agent graph from the sparsity of A.

    Args:
        lp: Problem whose nonzero pattern defines who talks to whom

    Returns:
        AgentGraph with ascending neighbor tuples
    """
    n, m = lp.n, lp.m
    sets: List[set] = [set() for _ in range(n + m)]
    A = lp.A
    for l in range(m):
        members = [int(i) for i in A.indices[A.indptr[l]:A.indptr[l + 1]]] + [n + l]
        for a in members:
            sets[a].update(members)
    for a, s in enumerate(sets):
        s.discard(a)
    return AgentGraph(n_real=n, n_virtual=m, neighbors=tuple(tuple(sorted(s)) for s in sets))
