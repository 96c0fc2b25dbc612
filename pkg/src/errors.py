"""
Error Types

Structured exceptions raised across the simulator. Each carries a stable
string code so the CLI (and tests) can tell failure kinds apart without
parsing messages.
"""

from typing import Any, List, Optional


class LPSimError(Exception):
    """Base class for all simulator errors."""

    code = "error"

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def __str__(self) -> str:
        return f"[{self.code}] {super().__str__()}"


class DimensionMismatchError(LPSimError, ValueError):
    """Array shapes disagree; `field` names the offending input."""

    code = "dimension-mismatch"

    def __init__(self, field: str, expected: Any, got: Any):
        super().__init__(f"{field}: expected {expected}, got {got}")
        self.field = field
        self.expected = expected
        self.got = got


class OracleError(LPSimError):
    """Reference solver failure: infeasible, unbounded or oracle-size-limit."""

    code = "oracle"


class PreconditionError(LPSimError, ValueError):
    code = "precondition"


class ModePreconditionError(PreconditionError):
    """Active set changes within the finite-difference step."""

    code = "mode-precondition"


class MissingSaddleError(PreconditionError):
    code = "missing-saddle"


class ConfigValidationError(LPSimError, ValueError):
    """Trigger or run configuration violates a bound."""

    code = "config-invalid"

    def __init__(self, violations: List[Any]):
        lines = "; ".join(str(v) for v in violations)
        super().__init__(f"{len(violations)} violation(s): {lines}")
        self.violations = list(violations)


class ProblemFormatError(LPSimError, ValueError):
    code = "problem-format"


class ZenoAbortError(LPSimError):
    """Jump budget exhausted while inter-event times were collapsing."""

    code = "zeno-abort"

    def __init__(self, message: str, trajectory: Any):
        super().__init__(message)
        self.trajectory = trajectory


class DivergenceError(LPSimError):
    """State left the finite range during a flow."""

    code = "divergence"

    def __init__(self, message: str, trajectory: Any):
        super().__init__(message)
        self.trajectory = trajectory
