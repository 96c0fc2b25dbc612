"""
Trigger Parameters

Per-agent parameters mu_i, tau_i and r_min_i with the bounds under which the
distributed design provably avoids Zeno behavior and keeps V decreasing:
    0 < mu_i <= 1/160
    0 < r_min_i <= tau_i < 1 / sqrt(960 |N_i| max_{j in N_i} |N_j|)
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np

from src.errors import ConfigValidationError
from src.network.topology import AgentGraph

logger = logging.getLogger(__name__)

MU_MAX = 1.0 / 160.0
TAU_CONSTANT = 960.0
ISOLATED_TAU = 1.0


class TriggerMode(str, Enum):
    CENTRALIZED = "centralized"
    DISTRIBUTED = "distributed"


@dataclass
class TriggerConfig:
    """Trigger mode plus per-agent parameter arrays of length n + m."""

    mode: TriggerMode
    mu: np.ndarray
    tau: np.ndarray
    r_min: np.ndarray

    def __post_init__(self):
        self.mode = TriggerMode(self.mode)
        self.mu = np.asarray(self.mu, dtype=float).reshape(-1)
        self.tau = np.asarray(self.tau, dtype=float).reshape(-1)
        self.r_min = np.asarray(self.r_min, dtype=float).reshape(-1)

    @property
    def distributed(self) -> bool:
        return self.mode is TriggerMode.DISTRIBUTED


@dataclass(frozen=True)
class ConfigViolation:
    agent: int
    parameter: str
    value: float
    bound: str

    def __str__(self) -> str:
        return f"agent {self.agent}: {self.parameter}={self.value:.6g} violates {self.bound}"


def tau_bounds(graph: AgentGraph) -> np.ndarray:
    """Strict upper bound on tau_i per agent (inf for agents without neighbors)."""
    degrees = graph.degrees()
    bounds = np.full(graph.n_agents, np.inf)
    for i, nbrs in enumerate(graph.neighbors):
        if nbrs:
            widest = max(degrees[j] for j in nbrs)
            bounds[i] = 1.0 / np.sqrt(TAU_CONSTANT * degrees[i] * widest)
    return bounds


def validate_config(graph: AgentGraph, cfg: TriggerConfig) -> List[ConfigViolation]:
    """
    List every violated bound; an empty list means the configuration is valid.

    Centralized mode only checks array lengths since mu, tau and r_min are unused.
    """
    violations: List[ConfigViolation] = []
    size = graph.n_agents
    for name in ("mu", "tau", "r_min"):
        arr = getattr(cfg, name)
        if arr.size != size:
            violations.append(ConfigViolation(-1, name, float(arr.size), f"length == {size}"))
    if violations or not cfg.distributed:
        return violations

    bounds = tau_bounds(graph)
    for i in range(size):
        mu, tau, r_min = cfg.mu[i], cfg.tau[i], cfg.r_min[i]
        if not 0.0 < mu <= MU_MAX:
            violations.append(ConfigViolation(i, "mu", mu, "0 < mu <= 1/160"))
        if not r_min > 0.0:
            violations.append(ConfigViolation(i, "r_min", r_min, "r_min > 0"))
        if not r_min <= tau:
            violations.append(ConfigViolation(i, "r_min", r_min, f"r_min <= tau = {tau:.6g}"))
        if not tau < bounds[i]:
            violations.append(ConfigViolation(i, "tau", tau, f"tau < {bounds[i]:.6g}"))
    return violations


def ensure_valid(graph: AgentGraph, cfg: TriggerConfig) -> TriggerConfig:
    """Raise ConfigValidationError listing all violations, else return cfg."""
    violations = validate_config(graph, cfg)
    if violations:
        raise ConfigValidationError(violations)
    return cfg


def default_config(graph: AgentGraph, mode: TriggerMode = TriggerMode.DISTRIBUTED, mu: Optional[float] = None,
                   tau_scale: float = 0.9, rmin_scale: float = 0.5) -> TriggerConfig:
    """
    Build (and validate) per-agent parameters.

    Args:
        graph: Agent graph the parameters are sized for
        mode: Centralized or distributed triggering
        mu: Common mu_i (default 1/160)
        tau_scale: tau_i as a fraction of its upper bound
        rmin_scale: r_min_i as a fraction of tau_i

    Returns:
        Validated TriggerConfig

    Raises:
        ConfigValidationError: if the resulting parameters violate a bound
    """
    size = graph.n_agents
    bounds = tau_bounds(graph)
    tau = np.where(np.isfinite(bounds), tau_scale * bounds, ISOLATED_TAU)
    cfg = TriggerConfig(
        mode=TriggerMode(mode),
        mu=np.full(size, MU_MAX if mu is None else float(mu)),
        tau=tau,
        r_min=rmin_scale * tau,
    )
    logger.debug(f"trigger defaults: mode={cfg.mode.value}, min tau={tau.min(initial=np.inf):.6g}")
    return ensure_valid(graph, cfg)
