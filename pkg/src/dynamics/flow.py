"""
Saddle-Point Flow

The flow map f(x, z) = -(A^T z + c + x) - A^T(Ax - b), its active set and the
projected dynamics driven by broadcast values. Batch evaluators operate on
stacked samples (one row per sample) for trajectory diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Tuple

import numpy as np

from src.errors import PreconditionError
from src.lp.problem import StandardLP


@dataclass
class PrimalDualPoint:
    """Primal vector x (length n) and dual vector z (length m)."""

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        self.z = np.asarray(self.z, dtype=float).reshape(-1)

    def shifted(self, direction: Tuple[np.ndarray, np.ndarray], step: float) -> "PrimalDualPoint":
        dx, dz = direction
        return PrimalDualPoint(self.x + step * dx, self.z + step * dz)

    def copy(self) -> "PrimalDualPoint":
        return PrimalDualPoint(self.x.copy(), self.z.copy())


@dataclass(frozen=True)
class ActiveSet:
    """Indices i with f_i >= 0 or x_i > 0, i.e. components flowing unclamped."""

    members: FrozenSet[int]
    n: int

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "ActiveSet":
        return cls(frozenset(int(i) for i in np.flatnonzero(mask)), int(mask.size))

    def mask(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        out[list(self.members)] = True
        return out

    def selector(self) -> np.ndarray:
        """Diagonal 0/1 matrix I_sigma."""
        return np.diag(self.mask().astype(float))

    def __contains__(self, i: object) -> bool:
        return i in self.members

    def __le__(self, other: "ActiveSet") -> bool:
        return self.members <= other.members

    def difference(self, other: "ActiveSet") -> "ActiveSet":
        return ActiveSet(self.members - other.members, self.n)

    def intersection(self, indices: Iterable[int]) -> "ActiveSet":
        return ActiveSet(self.members & frozenset(indices), self.n)


def flow_f(lp: StandardLP, pt: PrimalDualPoint) -> np.ndarray:
    """
    Evaluate f(x, z) = -(A^T z + c + x) - A^T(Ax - b).

    Raises:
        DimensionMismatchError: if x or z do not match the problem
    """
    x = lp.check_primal(pt.x)
    z = lp.check_dual(pt.z)
    A = lp.A
    return -(A.T @ z + lp.c + x) - A.T @ (A @ x - lp.b)


def active_mask(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    # exact comparisons, no tolerance
    return (f >= 0.0) | (x > 0.0)


def active_set(lp: StandardLP, pt: PrimalDualPoint) -> ActiveSet:
    return ActiveSet.from_mask(active_mask(lp.check_primal(pt.x), flow_f(lp, pt)))


def clamp_rates(x_hat: np.ndarray, f_hat: np.ndarray) -> np.ndarray:
    """x_dot_i = f_i if x_hat_i > 0, else max(0, f_i)."""
    return np.where(x_hat > 0.0, f_hat, np.maximum(f_hat, 0.0))


def projected_flow(lp: StandardLP, hat: PrimalDualPoint) -> Tuple[np.ndarray, np.ndarray]:
    """
    Projected saddle-point dynamics driven by broadcast values.

    Args:
        lp: Problem data
        hat: Broadcast primal-dual values (x_hat must be nonnegative)

    Returns:
        Tuple (x_dot, z_dot) = (I_sigma(hat) f(hat), A x_hat - b)

    Raises:
        PreconditionError: if hat.x has a negative entry
    """
    x_hat = lp.check_primal(hat.x, "hat.x")
    if x_hat.size and x_hat.min() < 0.0:
        raise PreconditionError(f"broadcast primal has negative entry {x_hat.min():.3e}")
    f_hat = flow_f(lp, hat)
    return clamp_rates(x_hat, f_hat), lp.A @ x_hat - lp.b


def flow_f_batch(lp: StandardLP, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Row-wise f for stacked samples X (k x n), Z (k x m)."""
    A = lp.A
    residual = (A @ X.T).T - lp.b
    return -((A.T @ Z.T).T + lp.c + X) - (A.T @ residual.T).T


def active_mask_batch(lp: StandardLP, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    return active_mask(X, flow_f_batch(lp, X, Z))
