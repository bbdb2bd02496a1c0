"""Problem files: JSON in, validated specs out.

Schema::

    {"dim": n,
     "S": {"kind": "max_linear", "generators": [[...], ...]}
          | {"kind": "norm_plus_linear", "linear": [...], "matrix": [[...], ...]},
     "P": {"kind": "min_linear", ...} | {"kind": "linear_minus_norm", ...},
     "M": {"basis": [[...], ...]},
     "f0": [...],
     "E1": {"basis": [[...], ...]},      # optional restriction / target space
     "order": [[...], ...]}              # optional completion order

Errors carry the JSON path of the offending entry (and the line/column for
syntax errors).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .functionals import FunctionalSpec, Kind, PartialLinearFunctional, Subspace

SUBLINEAR_KINDS = {Kind.MAX_LINEAR.value, Kind.NORM_PLUS_LINEAR.value}
SUPERLINEAR_KINDS = {Kind.MIN_LINEAR.value, Kind.LINEAR_MINUS_NORM.value}


class ProblemError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True, eq=False)
class Problem:
    dim: int
    S: FunctionalSpec
    P: FunctionalSpec
    f0: PartialLinearFunctional
    E1: Subspace | None = None
    order: list | None = None
    raw: dict | None = None

    @property
    def M(self) -> Subspace:
        return self.f0.subspace

    def to_dict(self) -> dict:
        out = {
            "dim": self.dim,
            "S": self.S.to_dict(),
            "P": self.P.to_dict(),
            "M": self.M.to_dict(),
            "f0": self.f0.values.tolist(),
        }
        if self.E1 is not None:
            out["E1"] = self.E1.to_dict()
        if self.order is not None:
            out["order"] = [list(map(float, v)) for v in self.order]
        return out

    def digest(self) -> str:
        return problem_digest(self.to_dict())


def problem_digest(data: dict) -> str:
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _matrix(value, path: str, cols: int, allow_empty: bool = False) -> np.ndarray:
    if not isinstance(value, list):
        raise ProblemError(path, "expected a list of vectors")
    if not value:
        if allow_empty:
            return np.zeros((0, cols))
        raise ProblemError(path, "must not be empty")
    rows = []
    for i, row in enumerate(value):
        rows.append(_vector(row, f"{path}[{i}]", cols))
    return np.array(rows)


def _vector(value, path: str, length: int | None) -> np.ndarray:
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ProblemError(path, "expected a list of numbers")
    arr = np.array(value, dtype=float)
    if length is not None and arr.shape[0] != length:
        raise ProblemError(path, f"has length {arr.shape[0]}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise ProblemError(path, "entries must be finite")
    return arr


def parse_spec(data, path: str, dim: int, allowed: set) -> FunctionalSpec:
    if not isinstance(data, dict):
        raise ProblemError(path, "expected an object")
    kind = data.get("kind")
    if kind not in allowed:
        raise ProblemError(f"{path}.kind", f"must be one of {sorted(allowed)}, got {kind!r}")
    if kind in (Kind.MAX_LINEAR.value, Kind.MIN_LINEAR.value):
        gens = _matrix(data.get("generators"), f"{path}.generators", dim)
        return FunctionalSpec(Kind(kind), generators=gens)
    linear = _vector(data.get("linear"), f"{path}.linear", dim)
    mat = data.get("matrix")
    if not isinstance(mat, list) or not mat:
        raise ProblemError(f"{path}.matrix", "expected a non-empty list of rows")
    matrix = _matrix(mat, f"{path}.matrix", dim)
    return FunctionalSpec(Kind(kind), linear=linear, matrix=matrix)


def _subspace(data, path: str, dim: int) -> Subspace:
    if not isinstance(data, dict) or "basis" not in data:
        raise ProblemError(path, 'expected {"basis": [...]}')
    basis = _matrix(data["basis"], f"{path}.basis", dim, allow_empty=True)
    try:
        return Subspace(basis, dim)
    except ValueError as exc:
        raise ProblemError(f"{path}.basis", str(exc)) from exc


def parse_problem(data: dict) -> Problem:
    if not isinstance(data, dict):
        raise ProblemError("$", "problem must be a JSON object")
    dim = data.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ProblemError("$.dim", "must be a positive integer")
    for key in ("S", "P", "M", "f0"):
        if key not in data:
            raise ProblemError(f"$.{key}", "missing")
    S = parse_spec(data["S"], "$.S", dim, SUBLINEAR_KINDS)
    P = parse_spec(data["P"], "$.P", dim, SUPERLINEAR_KINDS)
    M = _subspace(data["M"], "$.M", dim)
    f0 = _vector(data["f0"], "$.f0", M.dim)
    E1 = _subspace(data["E1"], "$.E1", dim) if data.get("E1") is not None else None
    if E1 is not None and not E1.contains(M):
        raise ProblemError("$.E1", "must contain M")
    order = None
    if data.get("order") is not None:
        order = list(_matrix(data["order"], "$.order", dim))
    return Problem(dim, S, P, PartialLinearFunctional(M, f0), E1, order, data)


def load_problem(path) -> Problem:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return parse_problem(data)
