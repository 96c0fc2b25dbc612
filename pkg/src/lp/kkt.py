"""
KKT Certification

Residual-based optimality checks for the LP and its quadratic regularization.
Both checks report the same four residuals: dual feasibility (stationarity
slack), primal equality, primal sign and complementary slackness.
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from src.lp.problem import KKTPoint, RegularizedQP, StandardLP


@dataclass
class KKTResiduals:
    """Worst violation of each KKT condition (0 means satisfied exactly)."""

    dual_feasibility: float
    primal_equality: float
    primal_sign: float
    complementarity: float

    def worst(self) -> float:
        return max(self.dual_feasibility, self.primal_equality, self.primal_sign, self.complementarity)

    def within(self, tol: float) -> bool:
        return self.worst() <= tol

    def as_dict(self) -> Dict[str, float]:
        return {
            "dual_feasibility": self.dual_feasibility,
            "primal_equality": self.primal_equality,
            "primal_sign": self.primal_sign,
            "complementarity": self.complementarity,
        }


def _residuals(lp: StandardLP, stationarity: np.ndarray, x: np.ndarray) -> KKTResiduals:
    eq = lp.A @ x - lp.b
    return KKTResiduals(
        dual_feasibility=float(max(0.0, -stationarity.min())) if stationarity.size else 0.0,
        primal_equality=float(np.abs(eq).max()) if eq.size else 0.0,
        primal_sign=float(max(0.0, -x.min())) if x.size else 0.0,
        complementarity=float(abs(stationarity @ x)),
    )


def kkt_residuals_lp(lp: StandardLP, pt: KKTPoint) -> KKTResiduals:
    x = lp.check_primal(pt.x_star, "x_star")
    z = lp.check_dual(pt.z_star, "z_star")
    return _residuals(lp, lp.c + lp.A.T @ z, x)


def kkt_residuals_qp(qp: RegularizedQP, pt: KKTPoint) -> KKTResiduals:
    lp = qp.base
    x = lp.check_primal(pt.x_star, "x_star")
    z = lp.check_dual(pt.z_star, "z_star")
    return _residuals(lp, qp.scaled_cost + x + lp.A.T @ z, x)


def kkt_check_lp(lp: StandardLP, pt: KKTPoint, tol: float = 1e-8) -> bool:
    """
    Check c + A^T z >= 0, Ax = b, x >= 0 and (c + A^T z)^T x = 0 within tol.

    Raises:
        DimensionMismatchError: if x_star or z_star has the wrong length
    """
    return kkt_residuals_lp(lp, pt).within(tol)


def kkt_check_qp(qp: RegularizedQP, pt: KKTPoint, tol: float = 1e-8) -> bool:
    """Same as kkt_check_lp with stationarity gamma c + x + A^T z."""
    return kkt_residuals_qp(qp, pt).within(tol)
