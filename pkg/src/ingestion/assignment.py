"""
Assignment Problem Generator

Linear relaxation of the N x N assignment problem: maximize total benefit
subject to every agent taking exactly one task and every task being taken by
exactly one agent. Variables are ordered row-major (x_11, x_12, ..., x_NN);
constraints list the N agent rows first, then the N task columns.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from src.errors import PreconditionError
from src.lp.problem import StandardLP

logger = logging.getLogger(__name__)

DEFAULT_BENEFITS = ((5.0, 15.0), (20.0, 10.0))
DEFAULT_OPTIMUM = (0.0, 1.0, 1.0, 0.0)
RANDOM_BENEFIT_RANGE = (1.0, 20.0)


@dataclass(frozen=True)
class AssignmentSpec:
    """
    N agents and N tasks with an N x N nonnegative benefit table.

    When benefits is None they are drawn uniformly from RANDOM_BENEFIT_RANGE
    with the given seed.
    """

    N: int
    benefits: Optional[Sequence[Sequence[float]]] = None
    seed: Optional[int] = None

    def benefit_matrix(self) -> np.ndarray:
        if self.benefits is None:
            rng = np.random.default_rng(self.seed)
            return rng.uniform(*RANDOM_BENEFIT_RANGE, size=(self.N, self.N))
        table = np.asarray(self.benefits, dtype=float)
        if table.shape != (self.N, self.N):
            raise PreconditionError(f"benefits must be {self.N}x{self.N}, got shape {table.shape}")
        if np.any(table < 0.0):
            raise PreconditionError("benefits must be nonnegative")
        return table


def default_spec() -> AssignmentSpec:
    return AssignmentSpec(N=2, benefits=DEFAULT_BENEFITS)


def generate_assignment(spec: AssignmentSpec) -> StandardLP:
    """
    Build the standard-form assignment LP.

    Args:
        spec: Problem size and benefits

    Returns:
        StandardLP with n = N^2, m = 2N and c = -benefits (row-major)

    Raises:
        PreconditionError: if N < 2 or the benefit table is invalid
    """
    N = int(spec.N)
    if N < 2:
        raise PreconditionError(f"assignment needs N >= 2, got {N}")
    benefits = spec.benefit_matrix()

    rows, cols = [], []
    for i in range(N):
        for k in range(N):
            var = i * N + k
            rows += [i, N + k]
            cols += [var, var]
    A = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(2 * N, N * N))
    lp = StandardLP(c=-benefits.reshape(-1), A=A, b=np.ones(2 * N), name=f"assignment-{N}")
    logger.info(f"generated {N}x{N} assignment LP: n={lp.n}, m={lp.m}")
    return lp


def assignment_matrix(x: np.ndarray, N: int) -> np.ndarray:
    """Reshape a primal vector into the N x N assignment table."""
    return np.asarray(x, dtype=float).reshape(N, N)


def is_permutation(x: np.ndarray, N: int, tol: float = 1e-6) -> bool:
    table = np.round(assignment_matrix(x, N))
    if not np.allclose(assignment_matrix(x, N), table, atol=tol):
        return False
    return bool(np.all(table.sum(axis=0) == 1) and np.all(table.sum(axis=1) == 1) and np.all(table >= 0))
