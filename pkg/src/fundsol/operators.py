"""Operator calculus on ``H^{k,h}``.

Structured operators act index by index with closed formulas: the
Laplacian, its canonical right inverse, multiplication by a coordinate or
a polynomial, and partial derivatives.  ``apply_L`` composes them.

``apply_T`` takes an independent route on purpose: after the right inverse
it differentiates closed forms ``P(x) |x|^h log^e|x|`` pointwise and only
then decomposes back into harmonic components.  Agreement of the two routes
is what the exact residual identity in :mod:`fundsol.expansion` checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import numpy as np

from .harmonic import HarmonicElement, HSeries, harmonic_decompose, in_omega, log_allowed
from .poly import MultiPoly

__all__ = [
    "OperatorSpec",
    "op_laplacian",
    "op_inv_laplacian",
    "op_mul_x",
    "op_mul_poly",
    "op_deriv",
    "series_laplacian",
    "series_inv_laplacian",
    "series_deriv",
    "series_mul_poly",
    "apply_L",
    "apply_T",
    "t_delta",
]


@dataclass(frozen=True)
class OperatorSpec:
    """``L = sum A_ij d_ij + sum b_i d_i + c`` with polynomial coefficients."""

    n: int
    A: tuple
    b: tuple
    c: MultiPoly
    name: str = ""
    description: str = field(default="", compare=False)

    def __post_init__(self):
        n = self.n
        A = tuple(tuple(row) for row in self.A)
        b = tuple(self.b)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if len(A) != n or any(len(row) != n for row in A):
            raise ValueError(f"A must be {n}x{n}")
        if len(b) != n:
            raise ValueError(f"b must have length {n}")
        for poly in [p for row in A for p in row] + list(b) + [self.c]:
            if not isinstance(poly, MultiPoly) or poly.n != n:
                raise ValueError(f"coefficients must be polynomials in {n} variables")
        for i in range(n):
            for j in range(i + 1, n):
                if A[i][j] != A[j][i]:
                    raise ValueError(f"A is not symmetric at ({i}, {j})")
        eig = np.linalg.eigvalsh(self.a0_float())
        if eig.min() <= 1e-12:
            raise ValueError("A(0) is not positive definite")

    @classmethod
    def laplacian(cls, n: int, name: str = "") -> "OperatorSpec":
        one, zero = MultiPoly.constant(n, 1), MultiPoly.zero(n)
        A = [[one if i == j else zero for j in range(n)] for i in range(n)]
        return cls(n, A, [zero] * n, zero, name or f"laplace{n}d")

    @property
    def degree_bound(self) -> int:
        polys = [p for row in self.A for p in row] + list(self.b) + [self.c]
        return max(p.degree() for p in polys)

    def a0(self) -> list[list[Fraction]]:
        return [[p.constant_term() for p in row] for row in self.A]

    def a0_float(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.a0()])

    def is_normalized(self) -> bool:
        """True when ``A(0)`` is exactly the identity."""
        return all(v == (i == j) for i, row in enumerate(self.a0()) for j, v in enumerate(row))

    def perturbation(self) -> list[list[MultiPoly]]:
        """``a = I - A``."""
        n = self.n
        return [[(MultiPoly.constant(n, 1) if i == j else MultiPoly.zero(n)) - self.A[i][j]
                 for j in range(n)] for i in range(n)]


def _zero(n: int) -> MultiPoly:
    return MultiPoly.zero(n)


def _elem(n, k, h, p, q) -> HarmonicElement:
    return HarmonicElement._make(n, k, h, p, q)


def _is_psi(f: HarmonicElement) -> bool:
    n = f.n
    if f.delta or f.k != 0:
        return False
    if n == 2:
        return f.h == 0 and bool(f.q)
    return f.h == 2 - n


# ---------------------------------------------------------------------------
# Laplacian and its right inverse


def op_laplacian(f: HarmonicElement) -> HarmonicElement:
    """Pointwise Laplacian of ``p|x|^h + q|x|^h log|x|`` at index ``(k, h-2)``."""
    if f.delta:
        raise ValueError("the Laplacian of the point mass is not represented")
    n, k, h = f.n, f.k, f.h
    if k + h < 2 - n:
        raise ValueError(f"index ({k}, {h}) is below the validity region")
    lam = h * (2 * k + h + n - 2)
    mix = 2 * h + 2 * k + n - 2
    p = f.p * lam + f.q * mix
    q = f.q * lam
    return _elem(n, k, h - 2, p, q)


def _laplacian_distributional(f: HarmonicElement) -> HSeries:
    # the fundamental slot carries the point mass the pointwise formula misses
    n = f.n
    if _is_psi(f):
        c = (f.q if n == 2 else f.p).constant_term()
        out = HSeries.delta(n, c)
        if n == 2 and f.p:
            out = out + HSeries(n, [op_laplacian(_elem(n, 0, 0, f.p, _zero(n)))])
        return out
    return HSeries(n, [op_laplacian(f)])


def op_inv_laplacian(f: HarmonicElement) -> HarmonicElement:
    """Canonical right inverse of the Laplacian, ``(k, h) -> (k, h+2)``.

    The point mass maps to ``|x|^{2-n}`` (``log|x|`` when ``n = 2``) with
    unit prefactor.
    """
    n = f.n
    if f.delta:
        return HarmonicElement.psi(n, f.p.constant_term())
    k, h = f.k, f.h
    if not in_omega(n, k, h):
        raise ValueError(f"index ({k}, {h}) is outside Omega")
    if h == -2:
        # q vanishes here by the log rule; 2k+n-2 > 0 inside Omega
        return _elem(n, k, 0, _zero(n), f.p / (2 * k + n - 2))
    a = (h + 2) * (2 * k + h + n)
    b = 2 * h + 2 * k + n + 2
    q = f.q / a
    p = (f.p - q * b) / a
    return _elem(n, k, h + 2, p, q)


# ---------------------------------------------------------------------------
# multiplication


def _mul_x(f: HarmonicElement, axis: int) -> list[HarmonicElement]:
    n, k, h = f.n, f.k, f.h
    x = MultiPoly.variable(n, axis)
    r2 = MultiPoly.r2(n)
    out = []
    if k == 0:
        # derivative part vanishes; also covers the 0/0 at n = 2, k = 0
        return [_elem(n, 1, h, x * f.p, x * f.q)]
    d = 2 * k + n - 2
    dp, dq = f.p.partial(axis), f.q.partial(axis)
    out.append(_elem(n, k + 1, h, x * f.p - r2 * dp / d, x * f.q - r2 * dq / d))
    out.append(_elem(n, k - 1, h + 2, dp / d, dq / d))
    return out


def op_mul_x(f: HarmonicElement, axis: int) -> tuple[HarmonicElement, HarmonicElement]:
    """``x_axis * f`` split into its ``(k+1, h)`` and ``(k-1, h+2)`` parts."""
    if f.delta:
        raise ValueError("multiplication of the point mass by a coordinate is zero; not represented")
    n, k, h = f.n, f.k, f.h
    if k + h < -n:
        raise ValueError(f"index ({k}, {h}) is below the critical line")
    parts = _mul_x(f, axis)
    if len(parts) == 1:
        parts.append(_elem(n, k - 1, h + 2, _zero(n), _zero(n)) if k >= 1
                     else _elem(n, 0, h + 2, _zero(n), _zero(n)))
    return parts[0], parts[1]


def _mul_poly_elem(a: MultiPoly, f: HarmonicElement, max_homogeneity=None) -> list[HarmonicElement]:
    # (a_d * p) decomposes into (k+d-2j, h+2j); same for the log companion
    n, k, h = f.n, f.k, f.h
    out = []
    for d, ad in a.homogeneous_parts().items():
        if max_homogeneity is not None and k + h + d > max_homogeneity:
            continue
        hp = harmonic_decompose(ad * f.p, k + d) if f.p else None
        hq = harmonic_decompose(ad * f.q, k + d) if f.q else None
        for j in range((k + d) // 2 + 1):
            p = hp[j] if hp else _zero(n)
            q = hq[j] if hq else _zero(n)
            if p or q:
                out.append(_elem(n, k + d - 2 * j, h + 2 * j, p, q))
    return out


def op_mul_poly(a: MultiPoly, f: HSeries) -> HSeries:
    """``a * f`` regrouped into harmonic components."""
    if a.n != f.n:
        raise ValueError("dimension mismatch")
    if any(g.delta for g in f.elements()):
        raise ValueError("polynomial multiples of the point mass are not represented")
    return HSeries(f.n, [g for e in f.elements() for g in _mul_poly_elem(a, e)])


series_mul_poly = op_mul_poly


# ---------------------------------------------------------------------------
# derivatives


def _deriv(f: HarmonicElement, axis: int) -> list[HarmonicElement]:
    n, k, h = f.n, f.k, f.h
    out = []
    if k >= 1:
        out.append(_elem(n, k - 1, h, f.p.partial(axis), f.q.partial(axis)))
    g = _elem(n, k, h - 2, f.p * h + f.q, f.q * h)
    if g:
        out.extend(_mul_x(g, axis))
    return out


def op_deriv(f: HarmonicElement, axis: int) -> tuple[HarmonicElement, HarmonicElement]:
    """``d f / d x_axis`` split into its ``(k-1, h)`` and ``(k+1, h-2)`` parts."""
    if f.delta:
        raise ValueError("derivatives of the point mass are not represented")
    n, k, h = f.n, f.k, f.h
    if k + h < 1 - n:
        raise ValueError(f"index ({k}, {h}) is below the critical line")
    low = _elem(n, max(k - 1, 0), h, _zero(n), _zero(n))
    high = _elem(n, k + 1, h - 2, _zero(n), _zero(n))
    for g in _deriv(f, axis):
        if g.k == k + 1:
            high = high + g
        else:
            low = low + g
    return low, high


def series_deriv(f: HSeries, axis: int) -> HSeries:
    return HSeries(f.n, [g for e in f.elements() for g in _deriv(e, axis)])


def series_laplacian(f: HSeries) -> HSeries:
    """Distributional Laplacian; the fundamental slot yields the point mass."""
    out = HSeries.zero(f.n)
    for e in f.elements():
        out = out + _laplacian_distributional(e)
    return out


def series_inv_laplacian(f: HSeries) -> HSeries:
    return HSeries(f.n, [op_inv_laplacian(e) for e in f.elements()])


# ---------------------------------------------------------------------------
# L through the structured operators


def apply_L(L: OperatorSpec, f: HSeries) -> HSeries:
    """``sum m_{A_ij} d_i d_j f + sum m_{b_i} d_i f + m_c f``.

    A component in the fundamental slot contributes the point mass through
    the constant part of ``A``, which must then be the identity; only the
    perturbation ``A - I`` acts on it pointwise.
    """
    n = L.n
    if f.n != n:
        raise ValueError("dimension mismatch")
    if any(e.delta for e in f.elements()):
        raise ValueError("apply_L does not act on the point mass")
    psi = HSeries(n, [e for e in f.elements() if _is_psi(e)])
    rest = f - psi
    if psi and not L.is_normalized():
        raise ValueError("the fundamental slot requires A(0) = identity")
    out = series_laplacian(psi)
    a = L.perturbation()
    first = [series_deriv(f, i) for i in range(n)]
    first_rest = [series_deriv(rest, i) for i in range(n)]
    first_psi = [series_deriv(psi, i) for i in range(n)]
    for i in range(n):
        for j in range(i, n):
            weight = 1 if i == j else 2
            if L.A[i][j] and rest:
                out = out + op_mul_poly(L.A[i][j], series_deriv(first_rest[j], i)).scale(weight)
            if a[i][j] and psi:
                out = out - op_mul_poly(a[i][j], series_deriv(first_psi[j], i)).scale(weight)
    for i in range(n):
        if L.b[i]:
            out = out + op_mul_poly(L.b[i], first[i])
    if L.c:
        out = out + op_mul_poly(L.c, f)
    return out


# ---------------------------------------------------------------------------
# T through pointwise calculus on closed forms


class _Radial:
    """Finite sum of ``P(x) |x|^h log^e|x|``, keyed by ``(h, e)``, ``e`` in {0, 1}.

    ``P`` need not be harmonic or homogeneous.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: dict | None = None):
        self.n = n
        self.terms = {key: p for key, p in (terms or {}).items() if p}

    @classmethod
    def from_series(cls, f: HSeries) -> "_Radial":
        terms: dict = {}
        for e in f.elements():
            if e.delta:
                raise ValueError("the point mass has no closed form")
            for key, p in (((e.h, 0), e.p), ((e.h, 1), e.q)):
                if p:
                    terms[key] = terms[key] + p if key in terms else p
        return cls(f.n, terms)

    def _put(self, acc: dict, key, p):
        if p:
            acc[key] = acc[key] + p if key in acc else p

    def deriv(self, axis: int) -> "_Radial":
        x = MultiPoly.variable(self.n, axis)
        acc: dict = {}
        for (h, e), p in self.terms.items():
            self._put(acc, (h, e), p.partial(axis))
            if h:
                self._put(acc, (h - 2, e), x * p * h)
            if e:
                self._put(acc, (h - 2, 0), x * p)
        return _Radial(self.n, acc)

    def mul(self, a: MultiPoly, max_homogeneity=None) -> "_Radial":
        acc: dict = {}
        for (h, e), p in self.terms.items():
            prod = a * p
            if max_homogeneity is not None:
                prod = prod.truncate(max_homogeneity - h)
            self._put(acc, (h, e), prod)
        return _Radial(self.n, acc)

    def __add__(self, other: "_Radial") -> "_Radial":
        acc = dict(self.terms)
        for key, p in other.terms.items():
            self._put(acc, key, p)
        return _Radial(self.n, acc)

    def to_series(self) -> HSeries:
        n = self.n
        elems = []
        for (h, e), poly in self.terms.items():
            for d, pd in poly.homogeneous_parts().items():
                for j, comp in enumerate(harmonic_decompose(pd, d)):
                    if not comp:
                        continue
                    k, hh = d - 2 * j, h + 2 * j
                    if e and not log_allowed(hh):
                        raise ValueError(f"log term at h = {hh} has no harmonic representative")
                    elems.append(_elem(n, k, hh, _zero(n), comp) if e else _elem(n, k, hh, comp, _zero(n)))
        return HSeries(n, elems)


def _delta_minus_L_pointwise(L: OperatorSpec, g: HSeries, max_homogeneity=None) -> HSeries:
    n = L.n
    a = L.perturbation()
    rad = _Radial.from_series(g)
    first = [rad.deriv(i) for i in range(n)]
    total = _Radial(n)
    for i in range(n):
        for j in range(i, n):
            if a[i][j]:
                coeff = a[i][j] if i == j else a[i][j] * 2
                total = total + first[j].deriv(i).mul(coeff, max_homogeneity)
        if L.b[i]:
            total = total + first[i].mul(-L.b[i], max_homogeneity)
    if L.c:
        total = total + rad.mul(-L.c, max_homogeneity)
    out = total.to_series()
    return out.truncated(max_homogeneity) if max_homogeneity is not None else out


def apply_T(L: OperatorSpec, f: HSeries, max_homogeneity: int | None = None) -> HSeries:
    """``(Laplacian - L)`` applied to the right inverse of ``f``.

    With ``max_homogeneity`` set, components of total homogeneity above it
    are dropped; exact for the kept ones because every term of ``T`` raises
    homogeneity.
    """
    if f.n != L.n:
        raise ValueError("dimension mismatch")
    if f.outside_omega():
        raise ValueError(f"input support leaves Omega at {f.outside_omega()}")
    has_delta = any(e.delta for e in f.elements())
    if has_delta and not L.is_normalized():
        raise ValueError("T of the point mass requires A(0) = identity")
    g = series_inv_laplacian(f)
    return _delta_minus_L_pointwise(L, g, max_homogeneity)


def t_delta(L: OperatorSpec, max_homogeneity: int | None = None) -> HSeries:
    """``T`` applied to the point mass, unit normalization."""
    if not L.is_normalized():
        raise ValueError("A(0) must be exactly the identity")
    return apply_T(L, HSeries.delta(L.n), max_homogeneity)
