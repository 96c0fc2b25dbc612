"""Projected saddle-point dynamics and Lyapunov diagnostics."""

from src.dynamics.flow import (
    ActiveSet,
    PrimalDualPoint,
    active_set,
    clamp_rates,
    flow_f,
    projected_flow,
)
from src.dynamics.lyapunov import (
    LagrangianParams,
    LieBoundReport,
    SaddleReference,
    compute_saddle,
    lagrangian,
    lie_derivative_check,
    lyapunov,
    lyapunov_v1,
    lyapunov_v2,
)

__all__ = [
    "ActiveSet",
    "LagrangianParams",
    "LieBoundReport",
    "PrimalDualPoint",
    "SaddleReference",
    "active_set",
    "clamp_rates",
    "compute_saddle",
    "flow_f",
    "lagrangian",
    "lie_derivative_check",
    "lyapunov",
    "lyapunov_v1",
    "lyapunov_v2",
    "projected_flow",
]
