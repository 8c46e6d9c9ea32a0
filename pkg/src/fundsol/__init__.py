"""Exact series expansions of fundamental solutions of elliptic operators
with polynomial coefficients near the origin."""

from .expansion import (
    ExpansionResult,
    build_expansion,
    compute_lambda,
    normalize_A0,
    rescale,
    structure_check,
    t_power_delta,
    verify_neumann,
)
from .harmonic import HarmonicElement, HSeries, harmonic_decompose, project
from .io import EvalRequest, evaluate, load_operator, parse_operator
from .operators import OperatorSpec, apply_L, apply_T, t_delta
from .poly import MultiPoly

__all__ = [
    "MultiPoly",
    "HarmonicElement",
    "HSeries",
    "harmonic_decompose",
    "project",
    "OperatorSpec",
    "apply_L",
    "apply_T",
    "t_delta",
    "ExpansionResult",
    "build_expansion",
    "compute_lambda",
    "normalize_A0",
    "rescale",
    "structure_check",
    "t_power_delta",
    "verify_neumann",
    "EvalRequest",
    "evaluate",
    "load_operator",
    "parse_operator",
]
