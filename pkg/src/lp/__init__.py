"""Standard-form LP model, KKT certification and reference oracles."""

from src.lp.kkt import kkt_check_lp, kkt_check_qp
from src.lp.oracle import exactness_probe, oracle_solve_lp, oracle_solve_qp
from src.lp.problem import KKTPoint, RegularizedQP, StandardLP

__all__ = [
    "KKTPoint",
    "RegularizedQP",
    "StandardLP",
    "exactness_probe",
    "kkt_check_lp",
    "kkt_check_qp",
    "oracle_solve_lp",
    "oracle_solve_qp",
]
