import numpy as np
import pytest
from scipy import sparse

from src.ingestion.assignment import default_spec, generate_assignment
from src.lp.problem import StandardLP
from src.network.scaling import max_consensus_scale


@pytest.fixture
def assignment_lp():
    """The 2x2 assignment LP with benefits [[5, 15], [20, 10]]."""
    return generate_assignment(default_spec())


@pytest.fixture
def scaled_assignment_lp(assignment_lp):
    return max_consensus_scale(assignment_lp).scaled


@pytest.fixture
def unit_lp():
    """min 0 s.t. x = 1, x >= 0; QP saddle (x, z) = (1, -1) with f = 0 exactly."""
    return StandardLP(c=np.zeros(1), A=sparse.csr_matrix(np.ones((1, 1))), b=np.ones(1), name="unit")


def _random_feasible_lp(rng, n_max=6, m_max=3):
    """
    Random LP with a known feasible point and a bounded optimum.

    A = [I + 0.2 U | R] with columns permuted, x0 > 0 on a support of size m,
    and c = A^T y + d with d >= 0 vanishing on the support so x0 is optimal.
    """
    m = int(rng.integers(1, m_max + 1))
    n = int(rng.integers(m + 1, n_max + 1))
    base = np.eye(m) + 0.2 * rng.uniform(-1.0, 1.0, size=(m, m))
    rest = rng.uniform(-1.0, 1.0, size=(m, n - m))
    perm = rng.permutation(n)
    A = np.hstack([base, rest])[:, perm]
    x0 = np.zeros(n)
    x0[:m] = rng.uniform(0.5, 1.5, size=m)
    x0 = x0[perm]
    y = rng.uniform(-1.0, 1.0, size=m)
    d = np.where(x0 > 0.0, 0.0, rng.uniform(1.0, 2.0, size=n))
    c = A.T @ y + d
    return StandardLP(c=c, A=sparse.csr_matrix(A), b=A @ x0, name="random"), x0


@pytest.fixture
def random_lp():
    """Factory (rng, n_max, m_max) -> (StandardLP, unique optimal x0)."""
    return _random_feasible_lp

