"""Sparse multivariate polynomials over the rationals.

A :class:`MultiPoly` in ``n`` variables is a map from exponent tuples to
nonzero :class:`fractions.Fraction` coefficients.  Values are immutable;
every operation returns a new polynomial.

Axes are 0-based throughout (``x1`` in printed output is axis 0).
"""

from __future__ import annotations

import operator
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "MultiPoly",
    "poly_laplacian",
    "poly_partial",
    "sphere_inner",
    "sphere_moment",
    "divide_by_r2",
    "r2_power",
]

Exponent = tuple


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"exact rational coefficient required, got {type(c).__name__}")


class MultiPoly:
    """Polynomial in ``n`` variables with exact rational coefficients."""

    __slots__ = ("n", "_terms", "_hash")

    def __init__(self, n: int, terms: Mapping[Sequence[int], object] | None = None):
        if n < 1:
            raise ValueError("number of variables must be positive")
        clean: dict[Exponent, Fraction] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(a) for a in e)
            if len(e) != n:
                raise ValueError(f"exponent {e} has length {len(e)}, expected {n}")
            if any(a < 0 for a in e):
                raise ValueError(f"negative exponent in {e}")
            c = _frac(c)
            if c:
                clean[e] = clean.get(e, 0) + c
        self.n = n
        self._terms = {e: c for e, c in clean.items() if c}
        self._hash = None

    @classmethod
    def _raw(cls, n: int, terms: dict) -> "MultiPoly":
        # trusted constructor: keys are length-n tuples, values nonzero Fractions
        obj = cls.__new__(cls)
        obj.n = n
        obj._terms = terms
        obj._hash = None
        return obj

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "MultiPoly":
        return cls._raw(n, {})

    @classmethod
    def constant(cls, n: int, c=1) -> "MultiPoly":
        c = _frac(c)
        return cls._raw(n, {(0,) * n: c} if c else {})

    @classmethod
    def variable(cls, n: int, axis: int) -> "MultiPoly":
        _check_axis(n, axis)
        e = [0] * n
        e[axis] = 1
        return cls._raw(n, {tuple(e): Fraction(1)})

    @classmethod
    def monomial(cls, exponent: Sequence[int], c=1) -> "MultiPoly":
        return cls(len(exponent), {tuple(exponent): c})

    @classmethod
    def r2(cls, n: int) -> "MultiPoly":
        """``|x|^2 = x1^2 + ... + xn^2``."""
        return r2_power(n, 1)

    # -- basic protocol ---------------------------------------------------

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __iter__(self) -> Iterator[Exponent]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.n == other.n and self._terms == other._terms
        if isinstance(other, (int, Rational)):
            return self == MultiPoly.constant(self.n, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self._terms.items())))
        return self._hash

    def coefficient(self, exponent: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exponent), Fraction(0))

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        return sorted(self._terms.items())

    def __repr__(self) -> str:
        return f"MultiPoly({self.n}, {str(self)!r})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        out = []
        for e, c in sorted(self._terms.items(), key=lambda t: (-sum(t[0]), tuple(-a for a in t[0]))):
            mono = "*".join(
                f"x{i + 1}" if a == 1 else f"x{i + 1}^{a}" for i, a in enumerate(e) if a
            )
            if not mono:
                s = str(abs(c))
            elif abs(c) == 1:
                s = mono
            else:
                s = f"{abs(c)}*{mono}"
            out.append(("-" if c < 0 else "+", s))
        first_sign, first = out[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, s in out[1:]:
            text += f" {sign} {s}"
        return text

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.n != self.n:
                raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")
            return other
        if isinstance(other, (int, Rational)):
            return MultiPoly.constant(self.n, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if len(other._terms) > len(self._terms):
            big, small = other._terms, self._terms
        else:
            big, small = self._terms, other._terms
        out = dict(big)
        for e, c in small.items():
            v = out.get(e)
            if v is None:
                out[e] = c
            else:
                v += c
                if v:
                    out[e] = v
                else:
                    del out[e]
        return MultiPoly._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw(self.n, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Rational)):
            c = _frac(other)
            if not c:
                return MultiPoly.zero(self.n)
            return MultiPoly._raw(self.n, {e: v * c for e, v in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = {}
        add = operator.add
        for ea, ca in self._terms.items():
            for eb, cb in other._terms.items():
                e = tuple(map(add, ea, eb))
                v = out.get(e)
                out[e] = ca * cb if v is None else v + ca * cb
        return MultiPoly._raw(self.n, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Rational)):
            return self * (1 / _frac(other))
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = MultiPoly.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- degree structure -------------------------------------------------

    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def min_degree(self) -> int:
        return min((sum(e) for e in self._terms), default=-1)

    def is_homogeneous(self, k: int | None = None) -> bool:
        """True when every term has total degree ``k`` (any common degree if None)."""
        degs = {sum(e) for e in self._terms}
        if not degs:
            return True
        if len(degs) > 1:
            return False
        return k is None or degs.pop() == k

    def homogeneous_part(self, d: int) -> "MultiPoly":
        return MultiPoly._raw(self.n, {e: c for e, c in self._terms.items() if sum(e) == d})

    def homogeneous_parts(self) -> dict[int, "MultiPoly"]:
        parts: dict[int, dict] = {}
        for e, c in self._terms.items():
            parts.setdefault(sum(e), {})[e] = c
        return {d: MultiPoly._raw(self.n, t) for d, t in sorted(parts.items())}

    def truncate(self, max_degree: int) -> "MultiPoly":
        return MultiPoly._raw(self.n, {e: c for e, c in self._terms.items() if sum(e) <= max_degree})

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.n, Fraction(0))

    # -- calculus ---------------------------------------------------------

    def partial(self, axis: int) -> "MultiPoly":
        _check_axis(self.n, axis)
        out = {}
        for e, c in self._terms.items():
            a = e[axis]
            if a:
                out[e[:axis] + (a - 1,) + e[axis + 1:]] = c * a
        return MultiPoly._raw(self.n, out)

    def laplacian(self) -> "MultiPoly":
        out: dict = {}
        for e, c in self._terms.items():
            for i, a in enumerate(e):
                if a >= 2:
                    f = e[:i] + (a - 2,) + e[i + 1:]
                    v = out.get(f)
                    w = c * (a * (a - 1))
                    out[f] = w if v is None else v + w
        return MultiPoly._raw(self.n, {e: c for e, c in out.items() if c})

    # -- evaluation and substitution ---------------------------------------

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple)):
            point = tuple(point[0])
        if len(point) != self.n:
            raise ValueError(f"expected {self.n} coordinates, got {len(point)}")
        total = 0
        for e, c in self._terms.items():
            term = c
            for x, a in zip(point, e):
                if a:
                    term = term * x**a
            total = total + term
        return total

    def evaluate_float(self, point: Sequence[float]) -> float:
        total = 0.0
        for e, c in self._terms.items():
            term = float(c)
            for x, a in zip(point, e):
                if a:
                    term *= x**a
            total += term
        return total

    def scale_vars(self, r) -> "MultiPoly":
        """Return ``p(r x)``."""
        r = _frac(r)
        out = {}
        for e, c in self._terms.items():
            v = c * r ** sum(e)
            if v:
                out[e] = v
        return MultiPoly._raw(self.n, out)

    def substitute_linear(self, matrix: Sequence[Sequence]) -> "MultiPoly":
        """Return ``p(M x)`` for an ``n x n`` rational matrix ``M``."""
        n = self.n
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise ValueError("matrix shape must match the number of variables")
        images = [MultiPoly(n, {tuple(int(j == i) for j in range(n)): matrix[k][i] for i in range(n)})
                  for k in range(n)]
        out = MultiPoly.zero(n)
        for e, c in self._terms.items():
            term = MultiPoly.constant(n, c)
            for k, a in enumerate(e):
                if a:
                    term = term * images[k] ** a
            out = out + term
        return out

    # -- serialization ----------------------------------------------------

    def to_records(self) -> list[dict]:
        return [
            {"e": list(e), "num": str(c.numerator), "den": str(c.denominator)}
            for e, c in sorted(self._terms.items())
        ]

    @classmethod
    def from_records(cls, n: int, records: Iterable[Mapping]) -> "MultiPoly":
        terms: dict = {}
        for rec in records:
            e = tuple(int(a) for a in rec["e"])
            c = Fraction(int(rec["num"]), int(rec["den"]))
            terms[e] = terms.get(e, 0) + c
        return cls(n, terms)


def _check_axis(n: int, axis: int) -> None:
    if not isinstance(axis, int) or not 0 <= axis < n:
        raise IndexError(f"axis {axis} out of range for {n} variables")


def poly_laplacian(p: MultiPoly) -> MultiPoly:
    return p.laplacian()


def poly_partial(p: MultiPoly, axis: int) -> MultiPoly:
    return p.partial(axis)


@lru_cache(maxsize=None)
def r2_power(n: int, j: int) -> MultiPoly:
    """``|x|^{2j}`` in ``n`` variables."""
    if j == 0:
        return MultiPoly.constant(n, 1)
    if j == 1:
        return MultiPoly._raw(
            n, {tuple(2 * (i == k) for i in range(n)): Fraction(1) for k in range(n)}
        )
    return r2_power(n, j - 1) * r2_power(n, 1)


@lru_cache(maxsize=None)
def sphere_moment(exponent: tuple) -> Fraction:
    """Average of ``x^exponent`` over the unit sphere in ``len(exponent)`` dimensions.

    Equals ``prod (a_i - 1)!! / (n (n+2) ... (n + |a| - 2))`` when every
    exponent is even and zero otherwise.
    """
    if any(a % 2 for a in exponent):
        return Fraction(0)
    n = len(exponent)
    num = 1
    for a in exponent:
        for t in range(a - 1, 0, -2):
            num *= t
    den = 1
    for j in range(sum(exponent) // 2):
        den *= n + 2 * j
    return Fraction(num, den)


def sphere_inner(p: MultiPoly, q: MultiPoly) -> Fraction:
    """``(1/|S^{n-1}|) * integral of p*q over the unit sphere``, exactly."""
    if p.n != q.n:
        raise ValueError("dimension mismatch")
    add = operator.add
    total = Fraction(0)
    for ea, ca in p.items():
        for eb, cb in q.items():
            e = tuple(map(add, ea, eb))
            if any(a & 1 for a in e):
                continue
            total += ca * cb * sphere_moment(e)
    return total


def divide_by_r2(p: MultiPoly) -> MultiPoly | None:
    """Exact quotient ``p / |x|^2`` or ``None`` when ``|x|^2`` does not divide ``p``.

    Division with remainder against the leading monomial ``x1^2``; the
    remainder is unique because ``(|x|^2)`` is principal.
    """
    n = p.n
    if not p:
        return MultiPoly.zero(n)
    if n == 1:
        rem = dict(p.items())
        quo = {}
        for e, c in list(rem.items()):
            if e[0] < 2:
                return None
            quo[(e[0] - 2,)] = c
        return MultiPoly._raw(1, quo)
    rem = dict(p.items())
    quo: dict = {}
    while True:
        lead = [e for e in rem if e[0] >= 2]
        if not lead:
            break
        top = max(e[0] for e in lead)
        for e in [e for e in lead if e[0] == top]:
            c = rem.pop(e)
            qe = (e[0] - 2,) + e[1:]
            quo[qe] = quo.get(qe, 0) + c
            for k in range(1, n):
                f = qe[:k] + (qe[k] + 2,) + qe[k + 1:]
                v = rem.get(f, 0) - c
                if v:
                    rem[f] = v
                else:
                    rem.pop(f, None)
    if rem:
        return None
    return MultiPoly._raw(n, {e: c for e, c in quo.items() if c})
