"""Acceptance criteria, one test each, with a PASS/FAIL line on the terminal."""

import math
import random
import time
from fractions import Fraction

import pytest

from fundsol.expansion import (
    build_expansion,
    compute_lambda,
    rescale,
    rescale_bands,
    structure_check,
    t_powers,
    verify_neumann,
)
from fundsol.graphs import G1, G2, crux_fit, product_entry, sigma_member
from fundsol.harmonic import HarmonicElement, harmonic_decompose, in_omega, log_allowed
from fundsol.io import EvalRequest, evaluate, load_operator
from fundsol.operators import OperatorSpec, op_inv_laplacian, op_laplacian
from fundsol.poly import MultiPoly, divide_by_r2, r2_power, sphere_inner

from conftest import FIXTURE_OPERATORS, random_harmonic, random_homogeneous


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail
    return emit


def test_criterion_01_exact_residual_identity(report):
    start = time.perf_counter()
    failures = []
    for name in FIXTURE_OPERATORS:
        try:
            verify_neumann(load_operator(name), 6, all_orders=True)
        except AssertionError as err:
            failures.append(f"{name}: {err}")
    elapsed = time.perf_counter() - start
    report(1, not failures and elapsed < 60,
           f"residual identity exact for m <= 6 on {len(FIXTURE_OPERATORS)} operators "
           f"in {elapsed:.1f}s {failures or ''}")


def test_criterion_02_golden_expansion(report):
    e = build_expansion(load_operator("coord_change_2d"), 2, "unit")
    x1, x2 = MultiPoly.variable(2, 0), MultiPoly.variable(2, 1)
    p0, log0 = e.band(0)
    p1, _ = e.band(1)
    want = (x2 ** 3 - x1 * x1 * x2 * 3) / 4
    ok = not p0 and log0 == MultiPoly.constant(2, 1) and p1 == want and e.reduced[1] == (want, 2)
    report(2, ok, f"band 0 = log|x| ({log0}), band 1 = ({p1}) / |x|^2")


def test_criterion_03_lambda(report):
    got = {name: compute_lambda(load_operator(name)).lam
           for name in ("laplace2d", "laplace3d", "x1d11_2d", "x1d11_3d", "radial_perturbed_3d")}
    want = {"laplace2d": math.inf, "laplace3d": math.inf, "x1d11_2d": 3, "x1d11_3d": 3,
            "radial_perturbed_3d": math.inf}
    report(3, got == want, f"lambda values {got}")


def test_criterion_04_structure(report):
    e = build_expansion(load_operator("x1d11_3d"), 4)
    rep = structure_check(e)
    degrees = {ell: e.band(ell)[0].degree() for ell in range(1, 5)}
    ok = rep.ok and all(degrees[ell] == 3 * ell and e.band(ell)[0].is_homogeneous(3 * ell) for ell in degrees)
    ok &= all(divide_by_r2(e.band(ell)[0]) is None for ell in degrees)
    report(4, ok, f"numerator degrees {degrees}, reduced exponents "
                  f"{ {ell: e.reduced[ell][1] for ell in degrees} }, violations {rep.violations}")


def test_criterion_05_support_cones(report):
    problems = []
    for name in FIXTURE_OPERATORS:
        L = load_operator(name)
        n = L.n
        lam = compute_lambda(L).lam
        for ell, t in enumerate(t_powers(L, 4)):
            if ell == 0:
                continue
            for k, h in t.support():
                if not in_omega(n, k, h) or not sigma_member(ell, (k, h + n)) or (h + n) % 2:
                    problems.append((name, ell, (k, h)))
            if lam != math.inf and not t[(int(lam) * ell, -n - 2 * ell)]:
                problems.append((name, ell, "lowest corner vanishes"))
    report(5, not problems, f"supports of T^l delta, l <= 4, inside the cones {problems or ''}")


def test_criterion_06_right_inverse_sweep(report):
    rng = random.Random(6)
    start = time.perf_counter()
    checked, bad = 0, []
    for n in (2, 3, 4):
        for k in range(0, 11):
            p_basis = random_harmonic(rng, n, k)
            q_basis = random_harmonic(rng, n, k)
            for h in range(-12, 11):
                if not in_omega(n, k, h):
                    continue
                q = q_basis if log_allowed(h) else None
                f = HarmonicElement(n, k, h, p_basis, q)
                checked += 1
                if op_laplacian(op_inv_laplacian(f)) != f:
                    bad.append((n, k, h))
    elapsed = time.perf_counter() - start
    report(6, not bad and elapsed < 10, f"{checked} admissible (n, k, h) in {elapsed:.2f}s {bad or ''}")


def test_criterion_07_harmonic_decomposition(report):
    rng = random.Random(7)
    bad = []
    for i in range(200):
        n = (2, 3, 4)[i % 3]
        degree = rng.randint(0, 12)
        p = random_homogeneous(rng, n, degree)
        parts = harmonic_decompose(p, degree)
        total = sum((r2_power(n, j) * h for j, h in enumerate(parts)), MultiPoly.zero(n))
        ok = total == p and all(h.laplacian() == MultiPoly.zero(n) for h in parts)
        ok &= all(sphere_inner(a, b) == 0 for j, a in enumerate(parts) for b in parts[j + 1:])
        if not ok:
            bad.append((n, degree))
    report(7, not bad, f"200 random polynomials reconstruct with orthogonal harmonic parts {bad or ''}")


def test_criterion_08_graph_bounds(report):
    start = time.perf_counter()
    missing = []
    for name in FIXTURE_OPERATORS:
        L = load_operator(name)
        origin = (0, -L.n)
        for ell, t in enumerate(t_powers(L, 3)):
            if ell:
                missing += [(name, ell, v) for v in t.support()
                            if product_entry([G1, G2] * ell, origin, v) <= 0]
    fits = {box: crux_fit(6, box).C for box in (10, 15, 20)}
    spread = max(fits.values()) / min(fits.values()) - 1
    elapsed = time.perf_counter() - start
    report(8, not missing and spread <= 0.05 and elapsed < 300,
           f"graph support covers T^l delta for l <= 3 {missing or ''}; "
           f"fitted C {', '.join(f'{b}: {c:.6f}' for b, c in fits.items())} (spread {spread:.2%})")


def test_criterion_09_newtonian_kernel(report):
    e = build_expansion(OperatorSpec.laplacian(3), 4)
    rng = random.Random(9)
    worst = 0.0
    for _ in range(10):
        x = [rng.uniform(-3, 3) for _ in range(3)]
        exact = -1 / (4 * math.pi * math.sqrt(sum(v * v for v in x)))
        got = evaluate(e, EvalRequest(x, normalization="geometric"))
        worst = max(worst, abs(got - exact) / abs(exact))
    report(9, worst < 5e-13, f"max relative error against -1/(4 pi |x|) is {worst:.2e}")


def test_criterion_10_rescaling_covariance(report):
    r = Fraction(1, 2)
    bad = []
    for name in ("coord_change_2d", "x1d11_2d", "x1d11_3d", "const_c0_3d", "radial_perturbed_3d"):
        L = load_operator(name)
        if build_expansion(rescale(L, r), 4) != rescale_bands(build_expansion(L, 4), r):
            bad.append(name)
    report(10, not bad, f"bands of the rescaled operator equal rescaled bands, r = 1/2 {bad or ''}")
