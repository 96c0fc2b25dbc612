"""
Run Configuration

A RunConfig fully determines a simulation run: problem source, trigger
parameters, regularization, horizon, noise and output location. Its JSON
dump is written next to the results as `config.echo` and can be loaded back
to reproduce the run.
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.errors import ConfigValidationError, ProblemFormatError
from src.ingestion.assignment import AssignmentSpec, default_spec, generate_assignment
from src.ingestion.problem_file import load_problem
from src.lp.problem import StandardLP
from src.settings import default_out_dir
from src.triggers.config import TriggerMode

logger = logging.getLogger(__name__)

ECHO_FILE = "config.echo"
DEFAULT_T_MAX = 200.0
DEFAULT_J_MAX = 5_000_000
DEFAULT_INIT_X = 0.5


class AssignmentModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    N: int = Field(2, ge=2)
    benefits: Optional[List[List[float]]] = None
    seed: Optional[int] = None

    @model_validator(mode="after")
    def check_table(self) -> "AssignmentModel":
        if self.benefits is not None:
            if len(self.benefits) != self.N or any(len(row) != self.N for row in self.benefits):
                raise ValueError(f"benefits must be a {self.N}x{self.N} table")
            if any(v < 0 for row in self.benefits for v in row):
                raise ValueError("benefits must be nonnegative")
        return self

    def to_spec(self) -> AssignmentSpec:
        benefits = None if self.benefits is None else tuple(tuple(row) for row in self.benefits)
        return AssignmentSpec(N=self.N, benefits=benefits, seed=self.seed)


class RunConfig(BaseModel):
    """
    Everything needed to reproduce a run.

    When neither `problem` nor `assignment` is given, the two-agent assignment
    instance with benefits [[5, 15], [20, 10]] is used.
    """

    model_config = ConfigDict(extra="forbid")

    problem: Optional[Path] = None
    assignment: Optional[AssignmentModel] = None
    mode: TriggerMode = TriggerMode.DISTRIBUTED
    mu: Optional[float] = Field(None, gt=0.0)
    tau_scale: float = Field(0.9, gt=0.0, lt=1.0)
    rmin_scale: float = Field(0.5, gt=0.0, le=1.0)
    gamma: float = Field(1.0, ge=0.0)
    t_max: float = Field(DEFAULT_T_MAX, gt=0.0)
    j_max: int = Field(DEFAULT_J_MAX, gt=0)
    noise_std: float = Field(0.0, ge=0.0)
    seed: int = 0
    out: Path = Field(default_factory=default_out_dir)
    preprocess: bool = True
    sample_every: Optional[float] = Field(None, gt=0.0)
    init_x: Optional[List[float]] = None
    init_z: Optional[List[float]] = None
    feasibility_tol: float = Field(1e-8, gt=0.0)

    @field_validator("init_x")
    @classmethod
    def nonnegative_init(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and any(v < 0 for v in value):
            raise ValueError("init_x must be nonnegative")
        return value

    @model_validator(mode="after")
    def single_source(self) -> "RunConfig":
        if self.problem is not None and self.assignment is not None:
            raise ValueError("give either problem or assignment, not both")
        return self

    @property
    def noise_enabled(self) -> bool:
        return self.noise_std > 0.0

    def resolve_problem(self) -> StandardLP:
        """Load or generate the LP named by this configuration."""
        if self.problem is not None:
            return load_problem(self.problem)
        spec = self.assignment.to_spec() if self.assignment is not None else default_spec()
        return generate_assignment(spec)

    def initial_point(self, lp: StandardLP) -> Tuple[np.ndarray, np.ndarray]:
        """(x0, z0): configured values, else x = 0.5 and z = 0."""
        x0 = np.full(lp.n, DEFAULT_INIT_X) if self.init_x is None else lp.check_primal(self.init_x, "init_x")
        z0 = np.zeros(lp.m) if self.init_z is None else lp.check_dual(self.init_z, "init_z")
        return x0, z0

    def echo(self) -> str:
        return self.model_dump_json(indent=2)

    def write_echo(self, out_dir: Optional[Path] = None) -> Path:
        out_dir = Path(out_dir or self.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / ECHO_FILE
        path.write_text(self.echo())
        return path

    @classmethod
    def from_echo(cls, path: Union[str, Path]) -> "RunConfig":
        """
        Load a config.echo (or any RunConfig JSON).

        Raises:
            ProblemFormatError: if the file cannot be read
            ConfigValidationError: if its content does not validate
        """
        path = Path(path)
        if path.is_dir():
            path = path / ECHO_FILE
        try:
            text = path.read_text()
        except OSError as exc:
            raise ProblemFormatError(f"cannot read run config {path}: {exc}") from exc
        return parse_config(text)


def parse_config(text: str) -> RunConfig:
    try:
        return RunConfig.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigValidationError([_format_error(e) for e in exc.errors()]) from exc


def build_config(**values) -> RunConfig:
    """Validate keyword values into a RunConfig, mapping errors to ConfigValidationError."""
    try:
        return RunConfig.model_validate(values)
    except ValidationError as exc:
        raise ConfigValidationError([_format_error(e) for e in exc.errors()]) from exc


def _format_error(error: dict) -> str:
    where = ".".join(str(part) for part in error.get("loc", ())) or "config"
    return f"{where}: {error.get('msg', 'invalid value')}"
