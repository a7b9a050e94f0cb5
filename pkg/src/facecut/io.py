"""JSON problem files and matrix files.

Complex scalars are written as ``[re, im]`` pairs. Python's float repr is the
shortest round-tripping decimal, so ``save`` followed by ``load`` reproduces
binary64 payloads bit for bit. NaN and infinities are rejected both ways.

Problem file layout::

    {"dim": d,
     "state": [[[re, im], ...], ...],            # optional for optimizer runs
     "constraints": [{"observable": [...], "bound": E,
                      "kind": "sublevel" | "level", "name": "H1"}, ...],
     "options": {...}}
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .core import (
    TAU_HERM,
    Constraint,
    ConstraintSet,
    DensityOperator,
    HermitianObservable,
    Kind,
    SubnormalizedState,
)
from .errors import ParseError, SchemaError, ValidationError


def _reject_constant(name):
    raise ParseError(f"non-finite number {name} is not allowed")


def _loads(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValidationError("cannot serialize non-finite entries")
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(obj, field: str, square: bool = True, dim: int | None = None) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise SchemaError(field, "expected a non-empty list of rows")
    ncols = len(obj[0])
    out = np.empty((len(obj), ncols), dtype=complex)
    for i, row in enumerate(obj):
        if len(row) != ncols:
            raise SchemaError(f"{field}[{i}]", f"row has {len(row)} entries, expected {ncols}")
        for j, z in enumerate(row):
            if (
                not isinstance(z, list)
                or len(z) != 2
                or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in z)
            ):
                raise SchemaError(f"{field}[{i}][{j}]", "expected a [re, im] pair of numbers")
            out[i, j] = complex(z[0], z[1])
    if square and out.shape[0] != out.shape[1]:
        raise SchemaError(field, f"expected a square matrix, got {out.shape[0]}x{out.shape[1]}")
    if dim is not None and out.shape[0] != dim:
        raise SchemaError(field, f"expected dimension {dim}, got {out.shape[0]}")
    return out


def decode_hermitian(obj, field: str, dim: int | None = None) -> np.ndarray:
    m = decode_matrix(obj, field, dim=dim)
    if np.max(np.abs(m - m.conj().T)) > TAU_HERM:
        raise SchemaError(field, "matrix is not Hermitian")
    return m


def _dump(obj, path) -> None:
    text = json.dumps(obj, allow_nan=False, indent=1)
    Path(path).write_text(text + "\n")


def save_matrix(path, m) -> None:
    m = np.asarray(m, dtype=complex)
    _dump({"dim": int(m.shape[0]), "matrix": encode_matrix(m)}, path)


def load_matrix(path) -> np.ndarray:
    data = _loads(Path(path).read_text())
    if isinstance(data, dict):
        if "matrix" not in data:
            raise SchemaError("matrix", "missing")
        return decode_matrix(data["matrix"], "matrix", square=False)
    return decode_matrix(data, "matrix", square=False)


@dataclass
class Problem:
    dim: int
    state: DensityOperator | SubnormalizedState | None
    constraints: ConstraintSet
    options: dict = field(default_factory=dict)

    def option_matrix(self, key: str, square: bool = True) -> np.ndarray:
        if key not in self.options:
            raise SchemaError(f"options.{key}", "missing")
        return decode_matrix(self.options[key], f"options.{key}", square=square)


def parse_problem(data: Any) -> Problem:
    if not isinstance(data, dict):
        raise SchemaError("<root>", "expected a JSON object")
    if "dim" not in data:
        raise SchemaError("dim", "missing")
    d = data["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise SchemaError("dim", "expected a positive integer")
    options = data.get("options", {})
    if not isinstance(options, dict):
        raise SchemaError("options", "expected an object")

    state = None
    if data.get("state") is not None:
        m = decode_hermitian(data["state"], "state", dim=d)
        try:
            state = SubnormalizedState(m) if options.get("subnormalized") else DensityOperator(m)
        except ValidationError as exc:
            raise SchemaError("state", str(exc)) from None

    raw = data.get("constraints", [])
    if not isinstance(raw, list):
        raise SchemaError("constraints", "expected a list")
    items = []
    for k, c in enumerate(raw):
        where = f"constraints[{k}]"
        if not isinstance(c, dict):
            raise SchemaError(where, "expected an object")
        for key in ("observable", "bound"):
            if key not in c:
                raise SchemaError(f"{where}.{key}", "missing")
        h = decode_hermitian(c["observable"], f"{where}.observable", dim=d)
        bound = c["bound"]
        if not isinstance(bound, (int, float)) or isinstance(bound, bool):
            raise SchemaError(f"{where}.bound", "expected a number")
        kind = c.get("kind", "sublevel")
        if kind not in ("sublevel", "level"):
            raise SchemaError(f"{where}.kind", f"unknown kind {kind!r}")
        name = c.get("name")
        if name is not None and not isinstance(name, str):
            raise SchemaError(f"{where}.name", "expected a string")
        items.append(Constraint(HermitianObservable(h, name), float(bound), Kind(kind)))
    return Problem(d, state, ConstraintSet(tuple(items)), options)


def load_problem(path) -> Problem:
    return parse_problem(_loads(Path(path).read_text()))


def problem_to_dict(state, cs: ConstraintSet, options: dict | None = None) -> dict:
    d = state.dim if state is not None else cs.dim
    out: dict[str, Any] = {"dim": int(d)}
    if state is not None:
        out["state"] = encode_matrix(getattr(state, "matrix", state))
    out["constraints"] = [
        {
            "observable": encode_matrix(c.observable.matrix),
            "bound": c.bound,
            "kind": c.kind.value,
            **({"name": c.name} if c.name else {}),
        }
        for c in cs
    ]
    out["options"] = dict(options or {})
    return out


def save_problem(path, state, cs: ConstraintSet, options: dict | None = None) -> None:
    _dump(problem_to_dict(state, cs, options), path)
