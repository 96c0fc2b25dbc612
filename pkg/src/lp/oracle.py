"""
Brute-Force Reference Solvers

Enumeration-based LP and QP solvers used as the test oracle. They are meant
for desk-scale problems (n, m <= 20) where enumerating bases (LP) or
zero-pinned variable subsets (QP) is affordable and easy to trust.
"""

import itertools
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import linprog

from src.errors import OracleError
from src.lp.kkt import kkt_check_lp, kkt_check_qp, kkt_residuals_lp
from src.lp.problem import KKTPoint, RegularizedQP, StandardLP

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-8
ORACLE_SIZE_LIMIT = 20
SINGULAR_COND = 1e12
EXACTNESS_TOL = 1e-6


def _check_size(lp: StandardLP) -> None:
    if lp.n > ORACLE_SIZE_LIMIT or lp.m > ORACLE_SIZE_LIMIT:
        raise OracleError(
            f"problem {lp.name} has n={lp.n}, m={lp.m}; oracle handles n, m <= {ORACLE_SIZE_LIMIT}",
            code="oracle-size-limit",
        )


def _independent_rows(lp: StandardLP, tol: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Reduce Ax = b to a full-row-rank subsystem.

    Returns:
        Tuple (row indices kept, reduced A, reduced b)

    Raises:
        OracleError: "infeasible" if the dropped rows contradict the kept ones
    """
    dense = lp.dense_A
    if lp.m == 0:
        return np.zeros(0, dtype=int), np.zeros((0, lp.n)), np.zeros(0)

    _, R, piv = linalg.qr(dense.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    scale = max(1.0, diag[0]) if diag.size else 1.0
    rank = int(np.sum(diag > 1e-10 * scale))
    rows = np.sort(piv[:rank])
    A_r, b_r = dense[rows], lp.b[rows]

    if rank < lp.m:
        x_ls = np.linalg.lstsq(A_r, b_r, rcond=None)[0] if rank else np.zeros(lp.n)
        gap = np.abs(dense @ x_ls - lp.b).max()
        if gap > tol * (1.0 + np.abs(lp.b).max()):
            raise OracleError(f"{lp.name}: equality system is inconsistent (gap {gap:.3e})", code="infeasible")
        logger.debug(f"{lp.name}: dropped {lp.m - rank} redundant constraint row(s)")
    return rows, A_r, b_r


def _lex_less(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    diff = a - b
    idx = np.flatnonzero(np.abs(diff) > tol)
    return bool(idx.size) and diff[idx[0]] < 0


def oracle_solve_lp(lp: StandardLP, tol: float = FEASIBILITY_TOL) -> KKTPoint:
    """
    Solve an LP by enumerating every basis of the (row-reduced) constraint matrix.

    The optimal basic feasible solution with a dual-feasible basis is returned;
    ties between optimal vertices go to the lexicographically smallest primal.

    Args:
        lp: Desk-scale standard-form LP
        tol: Feasibility tolerance for primal/dual sign tests

    Returns:
        KKTPoint with an optimal vertex and the dual of its basis

    Raises:
        OracleError: codes "infeasible", "unbounded" or "oracle-size-limit"
    """
    _check_size(lp)
    rows, A_r, b_r = _independent_rows(lp, tol)
    rank = rows.size

    best_x: Optional[np.ndarray] = None
    best_y: Optional[np.ndarray] = None
    best_obj = np.inf
    primal_feasible = 0
    skipped = 0

    for cols in itertools.combinations(range(lp.n), rank):
        cols = list(cols)
        B = A_r[:, cols]
        if rank and np.linalg.cond(B) > SINGULAR_COND:
            skipped += 1
            logger.debug(f"{lp.name}: skipping singular basis {cols}")
            continue
        x_B = np.linalg.solve(B, b_r) if rank else np.zeros(0)
        if x_B.size and x_B.min() < -tol:
            continue
        primal_feasible += 1

        y = np.linalg.solve(B.T, lp.c[cols]) if rank else np.zeros(0)
        reduced = lp.c - A_r.T @ y
        if reduced.min() < -tol:
            continue

        x = np.zeros(lp.n)
        x[cols] = np.where(np.abs(x_B) <= 1e-12, 0.0, x_B)
        obj = float(lp.c @ x)
        if best_x is None or obj < best_obj - tol or (abs(obj - best_obj) <= tol and _lex_less(x, best_x, tol)):
            best_x, best_y, best_obj = x, y, obj

    if best_x is None:
        if primal_feasible:
            raise OracleError(f"{lp.name}: no dual-feasible basis among {primal_feasible} feasible ones", code="unbounded")
        raise OracleError(f"{lp.name}: no basic feasible solution", code="infeasible")

    z = np.zeros(lp.m)
    z[rows] = -best_y
    point = KKTPoint(x_star=best_x, z_star=z)
    if not kkt_check_lp(lp, point, tol):
        logger.warning(f"{lp.name}: oracle point misses KKT tolerance: {kkt_residuals_lp(lp, point).as_dict()}")
    logger.info(f"{lp.name}: LP oracle objective {best_obj:.10g} ({skipped} singular bases skipped)")
    return point


def _dual_certificate(qp: RegularizedQP, x: np.ndarray, free: Sequence[int], pinned: Sequence[int],
                      tol: float) -> Optional[np.ndarray]:
    """Find z with stationarity on free variables and dual feasibility on pinned ones."""
    lp = qp.base
    dense = lp.dense_A
    target = -(qp.scaled_cost[free] + x[free])
    res = linprog(
        c=np.zeros(lp.m),
        A_ub=-dense[:, pinned].T if len(pinned) else None,
        b_ub=(qp.scaled_cost[pinned] + x[pinned] + tol) if len(pinned) else None,
        A_eq=dense[:, free].T if len(free) else None,
        b_eq=target if len(free) else None,
        bounds=[(None, None)] * lp.m,
        method="highs",
    )
    return res.x if res.status == 0 else None


def _solve_free_set(qp: RegularizedQP, free: List[int], pinned: List[int], tol: float) -> Optional[KKTPoint]:
    lp = qp.base
    nf, m = len(free), lp.m
    A_F = lp.dense_A[:, free]

    M = np.zeros((nf + m, nf + m))
    M[:nf, :nf] = np.eye(nf)
    M[:nf, nf:] = A_F.T
    M[nf:, :nf] = A_F
    rhs = np.concatenate([-qp.scaled_cost[free], lp.b])
    sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    if np.abs(M @ sol - rhs).max(initial=0.0) > 1e-9 * (1.0 + np.abs(rhs).max(initial=0.0)):
        return None

    x = np.zeros(lp.n)
    x[free] = sol[:nf]
    if x.min(initial=0.0) < -tol:
        return None
    x[np.abs(x) <= 1e-14] = 0.0

    z = sol[nf:]
    stationarity = qp.scaled_cost + x + lp.A.T @ z
    if pinned and stationarity[pinned].min() < -tol:
        if m == 0:
            return None
        z = _dual_certificate(qp, x, free, pinned, tol / 2)
        if z is None:
            return None
    point = KKTPoint(x_star=x, z_star=z)
    return point if kkt_check_qp(qp, point, tol) else None


def oracle_solve_qp(qp: RegularizedQP, tol: float = FEASIBILITY_TOL) -> KKTPoint:
    """
    Solve the regularized QP by active-set enumeration.

    Every subset S of variables pinned at zero is tried, smallest first; the
    remaining equality-constrained QP is solved through its linear KKT system.
    The first candidate passing kkt_check_qp is the unique optimum.

    Raises:
        OracleError: "infeasible" when no candidate certifies, "oracle-size-limit"
    """
    lp = qp.base
    _check_size(lp)
    indices = range(lp.n)
    tried = 0
    for k in range(lp.n + 1):
        for pinned in itertools.combinations(indices, k):
            tried += 1
            pinned_set = set(pinned)
            free = [i for i in indices if i not in pinned_set]
            point = _solve_free_set(qp, free, list(pinned), tol)
            if point is not None:
                logger.info(f"{lp.name}: QP oracle (gamma={qp.gamma:g}) certified after {tried} active sets")
                return point
    raise OracleError(f"{lp.name}: no active set certifies the regularized problem", code="infeasible")


def exactness_probe(lp: StandardLP, gammas: Sequence[float], tol: float = EXACTNESS_TOL) -> List[Tuple[float, bool]]:
    """
    For each gamma, check whether the QP optimum is an LP optimum.

    Args:
        lp: Desk-scale LP
        gammas: Regularization weights to probe
        tol: Feasibility and objective-gap tolerance

    Returns:
        List of (gamma, matches) pairs in input order
    """
    lp_point = oracle_solve_lp(lp)
    optimum = lp.objective(lp_point.x_star)
    results = []
    for gamma in gammas:
        x = oracle_solve_qp(RegularizedQP(lp, float(gamma))).x_star
        feasible = np.abs(lp.residual(x)).max(initial=0.0) <= tol and x.min(initial=0.0) >= -tol
        matches = bool(feasible and lp.objective(x) - optimum <= tol)
        results.append((float(gamma), matches))
    logger.info(f"{lp.name}: exactness probe {results}")
    return results


def exactness_threshold(probe: Sequence[Tuple[float, bool]]) -> Optional[float]:
    """Smallest probed gamma from which every larger probed gamma matches."""
    threshold = None
    for gamma, matches in sorted(probe, reverse=True):
        if not matches:
            break
        threshold = gamma
    return threshold
