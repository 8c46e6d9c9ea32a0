"""Shared oracles and builders for the test suite.

sympy is used only here, as an independent closed-form oracle.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations_with_replacement

import pytest
import sympy as sp
from hypothesis import settings

from fundsol.harmonic import HarmonicElement, HSeries, harmonic_part
from fundsol.io import load_operator
from fundsol.operators import OperatorSpec
from fundsol.poly import MultiPoly

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def sym_vars(n):
    return sp.symbols(f"x1:{n + 1}", real=True)


def to_sympy(p: MultiPoly, xs):
    return sum((sp.Rational(c.numerator, c.denominator) * sp.prod([x ** a for x, a in zip(xs, e)])
                for e, c in p.items()), sp.Integer(0))


def from_sympy(expr, xs) -> MultiPoly:
    poly = sp.Poly(sp.expand(expr), *xs)
    return MultiPoly(len(xs), {e: Fraction(int(c.p), int(c.q)) for e, c in poly.terms()})


def element_expr(f: HarmonicElement, xs):
    r = sp.sqrt(sum(x ** 2 for x in xs))
    return to_sympy(f.p, xs) * r ** f.h + to_sympy(f.q, xs) * r ** f.h * sp.log(r)


def series_expr(s: HSeries, xs):
    return sum((element_expr(f, xs) for f in s.elements() if not f.delta), sp.Integer(0))


def rand_point(rng, n):
    while True:
        pt = [sp.Rational(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(n)]
        if any(pt):
            return pt


def numeric_equal(e1, e2, xs, rng, points=20, tol=1e-25):
    """Closed forms agree at random rational points (high-precision floats)."""
    for _ in range(points):
        pt = dict(zip(xs, rand_point(rng, len(xs))))
        a = sp.N(e1.subs(pt), 40)
        b = sp.N(e2.subs(pt), 40)
        scale = max(1, abs(a), abs(b))
        if abs(a - b) > tol * scale:
            return False
    return True


def random_homogeneous(rng: random.Random, n: int, degree: int, terms: int = 6) -> MultiPoly:
    monos = list(combinations_with_replacement(range(n), degree))
    out = {}
    for combo in rng.sample(monos, min(terms, len(monos))):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out[tuple(e)] = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
    return MultiPoly(n, out)


def random_harmonic(rng: random.Random, n: int, k: int) -> MultiPoly:
    for _ in range(20):
        h = harmonic_part(random_homogeneous(rng, n, k), k)
        if h:
            return h
    return MultiPoly.zero(n)


def linear_solve_decomposition(p: MultiPoly, degree: int) -> list[MultiPoly]:
    """Oracle: solve sum_j |x|^{2j} h_j = p with Lap h_j = 0 for unknown coefficients."""
    n = p.n
    xs = sym_vars(n)
    r2 = sum(x ** 2 for x in xs)
    unknowns, parts = [], []
    for j in range(degree // 2 + 1):
        d = degree - 2 * j
        monos = [sp.prod(c) if c else sp.Integer(1)
                 for c in combinations_with_replacement(xs, d)]
        cs = sp.symbols(f"c{j}_0:{len(monos)}")
        unknowns.extend(cs)
        parts.append(sum(c * m for c, m in zip(cs, monos)))
    eqs = []
    total = sum(r2 ** j * h for j, h in enumerate(parts))
    eqs += sp.Poly(sp.expand(total - to_sympy(p, xs)), *xs).coeffs()
    for h in parts:
        lap = sum(sp.diff(h, x, 2) for x in xs)
        if lap != 0:
            eqs += sp.Poly(sp.expand(lap), *xs).coeffs()
    sol = sp.solve(eqs, unknowns, dict=True)
    assert len(sol) == 1
    sol = sol[0]
    return [from_sympy(h.subs(sol).subs({c: 0 for c in unknowns}), xs) for h in parts]


def diag_perturbed(n: int, a11: MultiPoly, name: str = "") -> OperatorSpec:
    one, zero = MultiPoly.constant(n, 1), MultiPoly.zero(n)
    A = [[a11 if i == j == 0 else (one if i == j else zero) for j in range(n)] for i in range(n)]
    return OperatorSpec(n, A, [zero] * n, zero, name)


FIXTURE_OPERATORS = [
    "laplace2d", "laplace3d", "laplace4d", "laplace5d",
    "x1d11_2d", "x1d11_3d", "const_c0_3d", "coord_change_2d",
]


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture(params=FIXTURE_OPERATORS)
def fixture_operator(request):
    return load_operator(request.param)
