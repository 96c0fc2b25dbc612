"""Communication structure and spectral preprocessing."""

from src.network.scaling import ScalingResult, gershgorin_estimates, max_consensus_scale, spectral_radius
from src.network.topology import AgentGraph, build_graph

__all__ = [
    "AgentGraph",
    "ScalingResult",
    "build_graph",
    "gershgorin_estimates",
    "max_consensus_scale",
    "spectral_radius",
]
