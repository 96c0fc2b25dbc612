"""
Lagrangian and Lyapunov Diagnostics

Augmented Lagrangian L^K, the Lyapunov candidates V1 (distance to a saddle
point), V2 (projected flow magnitude) and V = V1 + V2, and the numerical
check of the Lie-derivative bound along the projected flow.

The saddle reference is computed by the oracle and used for reporting only;
nothing here feeds back into the simulated dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.dynamics.flow import PrimalDualPoint, active_mask, flow_f, flow_f_batch, projected_flow
from src.errors import MissingSaddleError, ModePreconditionError
from src.lp.oracle import oracle_solve_qp
from src.lp.problem import KKTPoint, RegularizedQP, StandardLP

FD_STEP = 1e-6
_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class SaddleReference:
    """Saddle point (x_bar, z_bar) of L^K, i.e. a KKT pair of the flow problem's QP."""

    x_bar: np.ndarray
    z_bar: np.ndarray

    @classmethod
    def from_kkt(cls, pt: KKTPoint) -> "SaddleReference":
        return cls(np.array(pt.x_star), np.array(pt.z_star))

    def as_point(self) -> PrimalDualPoint:
        return PrimalDualPoint(self.x_bar.copy(), self.z_bar.copy())


def compute_saddle(flow_lp: StandardLP) -> SaddleReference:
    """Oracle saddle of the flow problem (its QP with unit regularization)."""
    return SaddleReference.from_kkt(oracle_solve_qp(RegularizedQP(flow_lp, 1.0)))


@dataclass
class LagrangianParams:
    """
    Penalty weight K and saddle reference for L^K and V1.

    K only parameterizes reporting; the flow itself does not depend on it.
    """

    K: float = 0.0
    saddle: Optional[SaddleReference] = None


@dataclass
class LieBoundReport:
    lhs: float
    rhs: float
    holds: bool
    tol_fd: float = 0.0
    central: bool = True

    @property
    def excess(self) -> float:
        """Amount by which lhs exceeds rhs (0 when within the bound)."""
        return max(0.0, self.lhs - self.rhs)


def lagrangian(lp: StandardLP, params: LagrangianParams, pt: PrimalDualPoint) -> float:
    """c^T x + 1/2 x^T x + 1/2|Ax - b|^2 + z^T(Ax - b) + K sum max(0, -x_i)."""
    x = lp.check_primal(pt.x)
    z = lp.check_dual(pt.z)
    residual = lp.A @ x - lp.b
    return float(
        lp.c @ x + 0.5 * x @ x + 0.5 * residual @ residual + z @ residual
        + params.K * np.maximum(0.0, -x).sum()
    )


def lyapunov_v1(params: LagrangianParams, pt: PrimalDualPoint) -> float:
    if params.saddle is None:
        raise MissingSaddleError("V1 needs a saddle reference")
    dx = pt.x - params.saddle.x_bar
    dz = pt.z - params.saddle.z_bar
    return float(0.5 * dx @ dx + 0.5 * dz @ dz)


def lyapunov_v2(lp: StandardLP, pt: PrimalDualPoint) -> float:
    f = flow_f(lp, pt)
    residual = lp.A @ pt.x - lp.b
    active = active_mask(pt.x, f)
    return float(0.5 * f[active] @ f[active] + 0.5 * residual @ residual)


def lyapunov(lp: StandardLP, params: LagrangianParams, pt: PrimalDualPoint) -> float:
    return lyapunov_v1(params, pt) + lyapunov_v2(lp, pt)


def lie_derivative_check(lp: StandardLP, params: LagrangianParams, pt: PrimalDualPoint,
                         hat: PrimalDualPoint, h: float = FD_STEP) -> LieBoundReport:
    """
    Compare the directional derivative of V along F(hat) with its error bound.

    The bound is
        -1/2 f_hat^T I_sig_hat f_hat - 1/4 |A x_hat - b|^2
        + 40 |e_x|^2 + 20 |e_z|^2 + 15 f^T I_{sig minus sig_hat} f
    with e = pt - hat. Central differences are used when the active set is
    the same on both sides of pt, a forward difference otherwise.

    Raises:
        ModePreconditionError: if sig(hat) is not contained in sig(pt), or the
            active set changes within one step h along the flow
    """
    f_hat = flow_f(lp, hat)
    f_pt = flow_f(lp, pt)
    sig_hat = active_mask(hat.x, f_hat)
    sig_pt = active_mask(pt.x, f_pt)
    if np.any(sig_hat & ~sig_pt):
        raise ModePreconditionError("active set of the broadcast state is not contained in the current one")

    direction = projected_flow(lp, hat)
    forward = pt.shifted(direction, h)
    if not np.array_equal(active_mask(forward.x, flow_f(lp, forward)), sig_pt):
        raise ModePreconditionError(f"active set changes within step {h:g} along the flow")
    backward = pt.shifted(direction, -h)
    central = bool(np.array_equal(active_mask(backward.x, flow_f(lp, backward)), sig_pt))

    v_pt = lyapunov(lp, params, pt)
    v_fwd = lyapunov(lp, params, forward)
    if central:
        lhs = (v_fwd - lyapunov(lp, params, backward)) / (2.0 * h)
        tol_fd = 64.0 * _EPS * (1.0 + abs(v_pt) + abs(v_fwd)) / h
    else:
        dx, dz = direction
        lhs = (v_fwd - v_pt) / h
        tol_fd = 64.0 * _EPS * (1.0 + abs(v_pt) + abs(v_fwd)) / h + 5.0 * h * (dx @ dx + dz @ dz)

    g_hat = lp.A @ hat.x - lp.b
    e_x = pt.x - hat.x
    e_z = pt.z - hat.z
    mismatch = sig_pt & ~sig_hat
    rhs = (
        -0.5 * f_hat[sig_hat] @ f_hat[sig_hat]
        - 0.25 * g_hat @ g_hat
        + 40.0 * e_x @ e_x
        + 20.0 * e_z @ e_z
        + 15.0 * f_pt[mismatch] @ f_pt[mismatch]
    )
    return LieBoundReport(lhs=float(lhs), rhs=float(rhs), holds=bool(lhs <= rhs + tol_fd),
                          tol_fd=float(tol_fd), central=central)


def penalty_bound(lp: StandardLP, X: np.ndarray, Z: np.ndarray) -> float:
    """K_bar = max over samples of |f(x, z)|_inf."""
    if X.shape[0] == 0:
        return 0.0
    return float(np.abs(flow_f_batch(lp, X, Z)).max(initial=0.0))


def default_penalty(k_bar: float) -> float:
    return 2.0 * (1.0 + k_bar)


def lyapunov_batch(lp: StandardLP, saddle: Optional[SaddleReference],
                   X: np.ndarray, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Row-wise (V1, V2, sigma mask) for stacked samples.

    V1 is NaN when no saddle reference is available.
    """
    F = flow_f_batch(lp, X, Z)
    mask = active_mask(X, F)
    residual = (lp.A @ X.T).T - lp.b
    v2 = 0.5 * np.sum(np.where(mask, F, 0.0) ** 2, axis=1) + 0.5 * np.sum(residual ** 2, axis=1)
    if saddle is None:
        v1 = np.full(X.shape[0], np.nan)
    else:
        v1 = 0.5 * np.sum((X - saddle.x_bar) ** 2, axis=1) + 0.5 * np.sum((Z - saddle.z_bar) ** 2, axis=1)
    return v1, v2, mask
