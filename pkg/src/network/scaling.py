"""
Distributed Spectral Preprocessing

Each virtual agent bounds the spectral radius of A^T A with a Gershgorin row
estimate, the estimates are spread by synchronous max-consensus, and every
constraint row is divided by max(1, rho_star) so the scaled problem satisfies
rho(A~^T A~) <= 1 without changing its solution set.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse

from src.lp.problem import StandardLP
from src.network.topology import AgentGraph, build_graph

logger = logging.getLogger(__name__)

SPECTRAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ScalingResult:
    """Outcome of the preprocessing phase."""

    rho_star: float
    estimates: np.ndarray
    consensus: np.ndarray
    divisors: np.ndarray
    rounds: int
    scaled: StandardLP
    rho_before: float
    rho_after: float

    @property
    def A_tilde(self) -> sparse.csr_matrix:
        return self.scaled.A

    @property
    def b_tilde(self) -> np.ndarray:
        return self.scaled.b

    def summary(self) -> Dict[str, float]:
        return {
            "rho_star": self.rho_star,
            "rounds": self.rounds,
            "rho_before": self.rho_before,
            "rho_after": self.rho_after,
        }


def gershgorin_estimates(lp: StandardLP) -> np.ndarray:
    """
    Per-constraint Gershgorin bound on rho(A^T A).

    Virtual agent l uses row l of A A^T (same nonzero spectrum as A^T A), whose
    entries a_l^T a_l' it can form from the constraints sharing a variable with
    its own: estimate_l = (A A^T)_ll + sum_{l' != l} |(A A^T)_ll'|.
    """
    if lp.m == 0:
        return np.zeros(0)
    gram = abs(lp.A @ lp.A.T)
    return np.asarray(gram.sum(axis=1)).reshape(-1)


def max_consensus(values: np.ndarray, adjacency: Dict[int, List[int]]) -> Tuple[np.ndarray, int]:
    """
    Synchronous max-consensus until nothing changes.

    Returns:
        Tuple (final values, number of rounds in which some value changed)
    """
    current = np.array(values, dtype=float)
    rounds = 0
    while True:
        nxt = current.copy()
        for l, nbrs in adjacency.items():
            if nbrs:
                nxt[l] = max(current[l], current[nbrs].max())
        if np.array_equal(nxt, current):
            return current, rounds
        current = nxt
        rounds += 1


def spectral_radius(A: sparse.spmatrix, tol: float = 1e-12, max_iter: int = 5000, seed: int = 0) -> float:
    """Power iteration estimate of rho(A^T A) (Rayleigh quotient, approaches from below)."""
    n = A.shape[1]
    if n == 0 or A.nnz == 0:
        return 0.0
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        y = A.T @ (A @ v)
        new_lam = float(v @ y)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        v = y / norm
        if abs(new_lam - lam) <= tol * max(1.0, new_lam):
            return new_lam
        lam = new_lam
    return lam


def max_consensus_scale(lp: StandardLP, graph: Optional[AgentGraph] = None) -> ScalingResult:
    """
    Run the preprocessing phase on lp.

    Args:
        lp: Original problem
        graph: Its agent graph (built from lp when omitted)

    Returns:
        ScalingResult with the row-scaled problem
    """
    if graph is None:
        graph = build_graph(lp)
    estimates = gershgorin_estimates(lp)
    consensus, rounds = max_consensus(estimates, graph.virtual_adjacency())
    divisors = np.maximum(1.0, consensus)
    rho_star = float(consensus.max(initial=0.0))
    scaled = lp.scale_rows(divisors, name=f"{lp.name}-scaled")

    rho_before = spectral_radius(lp.A)
    rho_after = spectral_radius(scaled.A)
    if rho_star + SPECTRAL_TOL < rho_before:
        logger.warning(f"{lp.name}: consensus bound {rho_star:.6g} below power-iteration estimate {rho_before:.6g}")
    if rho_after > 1.0 + SPECTRAL_TOL:
        logger.warning(f"{lp.name}: scaled spectral radius {rho_after:.12g} exceeds 1")
    logger.info(f"{lp.name}: rho_star={rho_star:g} after {rounds} consensus round(s); scaled radius {rho_after:.6g}")

    return ScalingResult(
        rho_star=rho_star,
        estimates=estimates,
        consensus=consensus,
        divisors=divisors,
        rounds=rounds,
        scaled=scaled,
        rho_before=rho_before,
        rho_after=rho_after,
    )
