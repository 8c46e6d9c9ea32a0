"""Operator files, expansion files and numeric evaluation.

Polynomials are lists of ``{"e": [exponents], "num": "int", "den": "int"}``
records, so parsing never involves expression syntax and stays exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Sequence

import jsonschema
import numpy as np

from .expansion import ExpansionResult
from .operators import OperatorSpec
from .poly import MultiPoly

__all__ = [
    "OperatorFormatError",
    "OPERATOR_SCHEMA",
    "parse_operator",
    "serialize_operator",
    "load_operator",
    "fixture_names",
    "parse_expansion",
    "serialize_expansion",
    "newton_constant",
    "EvalRequest",
    "evaluate",
]


class OperatorFormatError(ValueError):
    """Malformed operator file; the message names the offending field."""


_INT = {"oneOf": [{"type": "integer"}, {"type": "string", "pattern": r"^\s*[-+]?\d+\s*$"}]}

_POLY = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["e", "num"],
        "properties": {
            "e": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "num": _INT,
            "den": _INT,
        },
        "additionalProperties": False,
    },
}

OPERATOR_SCHEMA = {
    "type": "object",
    "required": ["n", "A", "b", "c"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "A": {"type": "array", "items": {"type": "array", "items": _POLY}},
        "b": {"type": "array", "items": _POLY},
        "c": _POLY,
        "name": {"type": "string"},
        "description": {"type": "string"},
    },
}


def _where(path: Sequence) -> str:
    return "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in path) or "<root>"


def _poly(n: int, records: list, path: list) -> MultiPoly:
    terms: dict = {}
    for i, rec in enumerate(records):
        here = _where(path + [i])
        e = tuple(rec["e"])
        if len(e) != n:
            raise OperatorFormatError(f"{here}.e: exponent has length {len(e)}, expected {n}")
        den = int(rec.get("den", 1))
        if den == 0:
            raise OperatorFormatError(f"{here}.den: zero denominator")
        terms[e] = terms.get(e, 0) + Fraction(int(rec["num"]), den)
    return MultiPoly(n, terms)


def parse_operator(text: str) -> OperatorSpec:
    """Parse an operator file; reject (never repair) asymmetric ``A``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise OperatorFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(data, OPERATOR_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise OperatorFormatError(f"{_where(list(exc.absolute_path))}: {exc.message}") from exc
    n = data["n"]
    if len(data["A"]) != n or any(len(row) != n for row in data["A"]):
        raise OperatorFormatError(f".A: expected a {n}x{n} array")
    if len(data["b"]) != n:
        raise OperatorFormatError(f".b: expected {n} entries")
    A = [[_poly(n, data["A"][i][j], ["A", i, j]) for j in range(n)] for i in range(n)]
    b = [_poly(n, data["b"][i], ["b", i]) for i in range(n)]
    c = _poly(n, data["c"], ["c"])
    for i in range(n):
        for j in range(i + 1, n):
            if A[i][j] != A[j][i]:
                raise OperatorFormatError(f".A[{i}][{j}]: A is not symmetric ({A[i][j]} vs {A[j][i]})")
    try:
        return OperatorSpec(n, A, b, c, data.get("name", ""), data.get("description", ""))
    except ValueError as exc:
        raise OperatorFormatError(f".A: {exc}") from exc


def serialize_operator(L: OperatorSpec) -> str:
    data = {
        "n": L.n,
        "A": [[p.to_records() for p in row] for row in L.A],
        "b": [p.to_records() for p in L.b],
        "c": L.c.to_records(),
    }
    if L.name:
        data["name"] = L.name
    if L.description:
        data["description"] = L.description
    return json.dumps(data, indent=1)


def fixture_names() -> list[str]:
    root = resources.files("fundsol") / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_operator(ref: str) -> OperatorSpec:
    """Read an operator from a path, or from a bundled fixture by name."""
    path = Path(ref)
    if path.is_file():
        return parse_operator(path.read_text())
    name = ref[:-5] if ref.endswith(".json") else ref
    res = resources.files("fundsol") / "fixtures" / f"{Path(name).name}.json"
    if res.is_file():
        return parse_operator(res.read_text())
    raise OperatorFormatError(f"no operator file or bundled fixture named {ref!r}")


def serialize_expansion(e: ExpansionResult) -> str:
    return json.dumps(e.to_json(), indent=1)


def parse_expansion(text: str) -> ExpansionResult:
    return ExpansionResult.from_json(json.loads(text))


# ---------------------------------------------------------------------------
# evaluation


def newton_constant(n: int) -> float:
    """``c_n`` with ``Lap(c_n psi) = delta``: ``1/(2 pi)`` for n = 2, else ``1/((2-n) |S^{n-1}|)``."""
    if n == 2:
        return 1.0 / (2.0 * math.pi)
    area = 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)
    return 1.0 / ((2 - n) * area)


@dataclass(frozen=True)
class EvalRequest:
    point: tuple
    max_band: int | None = None
    normalization: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(v) for v in self.point))
        if not any(self.point):
            raise ValueError("evaluation point must be nonzero")
        if self.normalization not in (None, "unit", "geometric"):
            raise ValueError(f"unknown normalization {self.normalization!r}")


def evaluate(e: ExpansionResult, req: EvalRequest) -> float:
    """Truncated expansion at a point (floats; coefficients converted at the end)."""
    if len(req.point) != e.n:
        raise ValueError(f"point has {len(req.point)} coordinates, expected {e.n}")
    top = e.N if req.max_band is None else req.max_band
    if top > e.N:
        raise ValueError(f"max_band {top} exceeds the expansion order {e.N}")
    x = req.point
    scale = 1.0
    if e.Q is not None and any(e.Q[i][j] != (i == j) for i in range(e.n) for j in range(e.n)):
        # u(y) = u_tilde(Q^{-1} y) / det Q
        qf = np.array([[float(v) for v in row] for row in e.Q])
        x = tuple(np.linalg.solve(qf, np.array(x)))
        scale = 1.0 / float(e.det_Q)
    r = math.sqrt(sum(v * v for v in x))
    if r == 0:
        raise ValueError("evaluation point must be nonzero")
    n = e.n
    total = 0.0
    for ell in range(top + 1):
        p, lg = e.band(ell)
        if p:
            total += p.evaluate_float(x) / r ** (2 * ell + n - 2)
        if lg:
            total += lg.evaluate_float(x) * math.log(r)
    norm = req.normalization or e.normalization
    if norm == "geometric":
        total *= newton_constant(n)
    return total * scale
