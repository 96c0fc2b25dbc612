"""
Standard-Form LP Data Model

Problem data for min c^T x s.t. Ax = b, x >= 0, with A kept row-sparse so
the communication structure between agents can be read off its sparsity,
plus the quadratically regularized QP built on top of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy import sparse

from src.errors import DimensionMismatchError, PreconditionError


def _frozen_vector(values: Any, name: str) -> np.ndarray:
    vec = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(vec)):
        raise PreconditionError(f"{name} contains non-finite entries")
    vec.setflags(write=False)
    return vec


@dataclass(frozen=True, eq=False)
class StandardLP:
    """
    Linear program in standard form.

    Args:
        c: Cost vector, length n
        A: Constraint matrix, m x n (dense or sparse input, stored as CSR)
        b: Right-hand side, length m
        name: Label used in logs and exports
    """

    c: np.ndarray
    A: sparse.csr_matrix
    b: np.ndarray
    name: str = "lp"
    _dense: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = _frozen_vector(self.c, "c")
        b = _frozen_vector(self.b, "b")
        A = sparse.csr_matrix(self.A, dtype=float, copy=True)
        if A.ndim != 2:
            raise DimensionMismatchError("A", "2-D matrix", A.ndim)
        if A.shape[1] != c.size:
            raise DimensionMismatchError("A", f"{c.size} columns (len c)", A.shape[1])
        if A.shape[0] != b.size:
            raise DimensionMismatchError("A", f"{b.size} rows (len b)", A.shape[0])
        A.eliminate_zeros()
        A.sort_indices()
        dense = A.toarray()
        dense.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "_dense", dense)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def dense_A(self) -> np.ndarray:
        """Read-only dense copy of A (desk-scale problems only)."""
        return self._dense

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ self.check_primal(x))

    def residual(self, x: np.ndarray) -> np.ndarray:
        """Constraint residual Ax - b."""
        return self.A @ self.check_primal(x) - self.b

    def check_primal(self, x: Any, field_name: str = "x") -> np.ndarray:
        vec = np.asarray(x, dtype=float).reshape(-1)
        if vec.size != self.n:
            raise DimensionMismatchError(field_name, self.n, vec.size)
        return vec

    def check_dual(self, z: Any, field_name: str = "z") -> np.ndarray:
        vec = np.asarray(z, dtype=float).reshape(-1)
        if vec.size != self.m:
            raise DimensionMismatchError(field_name, self.m, vec.size)
        return vec

    def with_cost(self, c: np.ndarray, name: Optional[str] = None) -> "StandardLP":
        return StandardLP(c=c, A=self.A, b=self.b, name=name or self.name)

    def scale_rows(self, divisors: np.ndarray, name: Optional[str] = None) -> "StandardLP":
        """Divide row l of (A, b) by divisors[l]; the feasible set is unchanged."""
        divisors = np.asarray(divisors, dtype=float).reshape(-1)
        if divisors.size != self.m:
            raise DimensionMismatchError("divisors", self.m, divisors.size)
        if self.m == 0:
            return self
        if np.any(divisors <= 0):
            raise PreconditionError("row divisors must be positive")
        inv = sparse.diags(1.0 / divisors)
        return StandardLP(c=self.c, A=inv @ self.A, b=self.b / divisors, name=name or self.name)

    def permute_columns(self, perm: np.ndarray) -> "StandardLP":
        """Reorder variables so that new variable k is old variable perm[k]."""
        perm = np.asarray(perm, dtype=int)
        return StandardLP(c=self.c[perm], A=self.A[:, perm], b=self.b, name=self.name)


@dataclass(frozen=True, eq=False)
class KKTPoint:
    """Primal-dual pair (x*, z*) certified by the KKT checks."""

    x_star: np.ndarray
    z_star: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_star", _frozen_vector(self.x_star, "x_star"))
        object.__setattr__(self, "z_star", _frozen_vector(self.z_star, "z_star"))


@dataclass(frozen=True)
class RegularizedQP:
    """
    Quadratic regularization gamma * c^T x + 1/2 x^T x over the LP feasible set.

    gamma is a plain knob; no threshold above which the regularization is exact
    is computed here (see exactness_probe).
    """

    base: StandardLP
    gamma: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise PreconditionError(f"gamma must be a nonnegative real, got {self.gamma}")

    @property
    def scaled_cost(self) -> np.ndarray:
        return self.gamma * self.base.c

    def objective(self, x: np.ndarray) -> float:
        x = self.base.check_primal(x)
        return float(self.scaled_cost @ x + 0.5 * x @ x)

    def flow_problem(self) -> StandardLP:
        """LP (gamma c, A, b) whose saddle-point flow solves this QP."""
        if self.gamma == 1.0:
            return self.base
        return self.base.with_cost(self.scaled_cost, name=f"{self.base.name}@gamma={self.gamma:g}")
