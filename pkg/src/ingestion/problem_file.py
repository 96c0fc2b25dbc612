"""
Problem File Ingestion

JSON problem files in standard form:

    {"name": "...", "n": 4, "m": 4, "c": [...], "b": [...],
     "A": [{"row": 0, "col": 0, "value": 1.0}, ...]}

A is given as sparse coordinate entries; absent entries are zero and
duplicate coordinates are summed.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator
from scipy import sparse

from src.errors import LPSimError, ProblemFormatError
from src.lp.problem import StandardLP

logger = logging.getLogger(__name__)


class MatrixEntry(BaseModel):
    row: int = Field(ge=0)
    col: int = Field(ge=0)
    value: float


class ProblemDocument(BaseModel):
    name: Optional[str] = None
    n: int = Field(ge=1)
    m: int = Field(ge=0)
    c: List[float]
    b: List[float]
    A: List[MatrixEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_dimensions(self) -> "ProblemDocument":
        if len(self.c) != self.n:
            raise ValueError(f"c has {len(self.c)} entries, expected n={self.n}")
        if len(self.b) != self.m:
            raise ValueError(f"b has {len(self.b)} entries, expected m={self.m}")
        for entry in self.A:
            if entry.row >= self.m or entry.col >= self.n:
                raise ValueError(f"A entry ({entry.row}, {entry.col}) outside {self.m}x{self.n}")
        return self

    def to_lp(self) -> StandardLP:
        rows = [e.row for e in self.A]
        cols = [e.col for e in self.A]
        vals = [e.value for e in self.A]
        A = sparse.coo_matrix((vals, (rows, cols)), shape=(self.m, self.n)).tocsr()
        return StandardLP(c=np.array(self.c), A=A, b=np.array(self.b), name=self.name or "lp")

    @classmethod
    def from_lp(cls, lp: StandardLP) -> "ProblemDocument":
        coo = lp.A.tocoo()
        entries = [MatrixEntry(row=int(r), col=int(k), value=float(v)) for r, k, v in zip(coo.row, coo.col, coo.data)]
        return cls(name=lp.name, n=lp.n, m=lp.m, c=lp.c.tolist(), b=lp.b.tolist(), A=entries)


def parse_problem(text: str, source: str = "<string>") -> StandardLP:
    """
    Parse a JSON problem document.

    Raises:
        ProblemFormatError: on malformed JSON, missing fields or inconsistent dimensions
    """
    try:
        doc = ProblemDocument.model_validate_json(text)
    except ValidationError as exc:
        raise ProblemFormatError(f"{source}: {exc.error_count()} error(s): {exc.errors()[0]['msg']}") from exc
    try:
        return doc.to_lp()
    except LPSimError as exc:
        raise ProblemFormatError(f"{source}: {exc}") from exc


def load_problem(path: Union[str, Path]) -> StandardLP:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemFormatError(f"cannot read problem file {path}: {exc}") from exc
    lp = parse_problem(text, str(path))
    logger.info(f"loaded problem '{lp.name}' from {path}: n={lp.n}, m={lp.m}, nnz={lp.A.nnz}")
    return lp


def save_problem(lp: StandardLP, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = ProblemDocument.from_lp(lp)
    path.write_text(json.dumps(doc.model_dump(), indent=2))
    return path
