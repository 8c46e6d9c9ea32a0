"""Weighted harmonic spaces ``H^{k,h}`` and finite series over them.

An element of ``H^{k,h}`` is ``p |x|^h + q |x|^h log|x|`` with ``p, q``
harmonic and homogeneous of degree ``k``; the log companion ``q`` is only
allowed when ``h`` is a nonnegative even integer.  The admissible index set
is ``Omega = {k >= 0, k + h > -n}``.

The point mass at the origin is carried as a distinguished element at
index ``(0, -n)`` with ``delta=True``.  In the exact pipeline it stands for
``Laplacian(psi)`` where ``psi = |x|^{2-n}`` (``log|x|`` when ``n = 2``); the
transcendental normalization is applied only at numeric evaluation time.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .poly import MultiPoly, r2_power, sphere_inner

__all__ = [
    "in_omega",
    "log_allowed",
    "harmonic_decompose",
    "harmonic_part",
    "project",
    "HarmonicElement",
    "HSeries",
    "element_norm_sq",
    "series_add",
    "series_scale",
]


def in_omega(n: int, k: int, h: int) -> bool:
    return k >= 0 and k + h > -n


def log_allowed(h: int) -> bool:
    return h >= 0 and h % 2 == 0


# ---------------------------------------------------------------------------
# harmonic decomposition of homogeneous polynomials


def _split_harmonic(p: MultiPoly, m: int) -> tuple[MultiPoly, MultiPoly]:
    """Split degree-``m`` ``p`` as ``h0 + |x|^2 * rest`` with ``h0`` harmonic.

    Uses ``h0 = sum_j c_j |x|^{2j} Lap^j p`` with
    ``c_j = prod_{i<=j} -1 / (2i (n + 2m - 2 - 2i))``.
    """
    n = p.n
    laps = [p]
    while len(laps) <= m // 2:
        nxt = laps[-1].laplacian()
        if not nxt:
            break
        laps.append(nxt)
    if len(laps) == 1:
        return p, MultiPoly.zero(n)
    coeffs = [Fraction(1)]
    for i in range(1, len(laps)):
        coeffs.append(coeffs[-1] * Fraction(-1, 2 * i * (n + 2 * m - 2 - 2 * i)))
    r2 = r2_power(n, 1)
    s = laps[-1] * coeffs[-1]
    for j in range(len(laps) - 2, 0, -1):
        s = laps[j] * coeffs[j] + r2 * s
    return p + r2 * s, -s


def harmonic_decompose(p: MultiPoly, degree: int | None = None) -> list[MultiPoly]:
    """Unique decomposition ``p = sum_j |x|^{2j} h_j`` with ``h_j`` harmonic.

    Returns ``[h_0, h_1, ..., h_{floor(l/2)}]`` where ``h_j`` has degree
    ``l - 2j``.  ``degree`` is required only for the zero polynomial.
    """
    if degree is None:
        if not p:
            raise ValueError("degree must be given for the zero polynomial")
        degree = p.degree()
    if not p.is_homogeneous(degree):
        raise ValueError(f"input is not homogeneous of degree {degree}")
    parts = []
    cur, m = p, degree
    while m >= 0:
        if not cur:
            parts.append(MultiPoly.zero(p.n))
        else:
            h0, cur = _split_harmonic(cur, m)
            parts.append(h0)
        m -= 2
    return parts


def harmonic_part(p: MultiPoly, degree: int | None = None) -> MultiPoly:
    """Top harmonic component ``h_0`` of a homogeneous polynomial."""
    if degree is None:
        degree = p.degree()
    if not p:
        return p
    if not p.is_homogeneous(degree):
        raise ValueError(f"input is not homogeneous of degree {degree}")
    return _split_harmonic(p, degree)[0]


def project(p: MultiPoly, i: int, j: int) -> MultiPoly:
    """Harmonic ``h`` such that ``|x|^j h`` is the ``H^{i,j}`` component of ``p``."""
    if j < 0 or j % 2:
        raise ValueError(f"radial weight must be even and nonnegative, got {j}")
    if i < 0:
        raise ValueError("harmonic degree must be nonnegative")
    if p and not p.is_homogeneous(i + j):
        raise ValueError(f"input is not homogeneous of degree {i + j}")
    return harmonic_decompose(p, i + j)[j // 2]


# ---------------------------------------------------------------------------
# elements and series


class HarmonicElement:
    """``p |x|^h + q |x|^h log|x|`` in ``H^{k,h}``, or the point mass.

    The constructor checks homogeneity, harmonicity and the log rule.
    """

    __slots__ = ("n", "k", "h", "p", "q", "delta")

    def __init__(self, n: int, k: int, h: int, p: MultiPoly | None = None,
                 q: MultiPoly | None = None, *, delta: bool = False):
        p = MultiPoly.zero(n) if p is None else p
        q = MultiPoly.zero(n) if q is None else q
        if p.n != n or q.n != n:
            raise ValueError("dimension mismatch")
        if k < 0:
            raise ValueError(f"harmonic degree must be nonnegative, got {k}")
        if delta:
            if (k, h) != (0, -n) or q or not p.is_homogeneous(0):
                raise ValueError("the point mass lives at (0, -n) with a constant coefficient")
        for name, poly in (("p", p), ("q", q)):
            if not poly.is_homogeneous(k):
                raise ValueError(f"{name} is not homogeneous of degree {k}")
            if poly.laplacian():
                raise ValueError(f"{name} is not harmonic")
        if q and not log_allowed(h):
            raise ValueError(f"log part not allowed at h = {h}")
        self.n, self.k, self.h, self.p, self.q, self.delta = n, k, h, p, q, delta

    @classmethod
    def _make(cls, n, k, h, p, q, delta=False) -> "HarmonicElement":
        obj = cls.__new__(cls)
        obj.n, obj.k, obj.h, obj.p, obj.q, obj.delta = n, k, h, p, q, delta
        return obj

    @classmethod
    def point_mass(cls, n: int, c=1) -> "HarmonicElement":
        return cls._make(n, 0, -n, MultiPoly.constant(n, c), MultiPoly.zero(n), True)

    @classmethod
    def psi(cls, n: int, c=1) -> "HarmonicElement":
        """``c * Lap^{-1}(delta)``: ``c |x|^{2-n}``, or ``c log|x|`` when ``n = 2``."""
        one = MultiPoly.constant(n, c)
        if n == 2:
            return cls._make(n, 0, 0, MultiPoly.zero(n), one)
        return cls._make(n, 0, 2 - n, one, MultiPoly.zero(n))

    @property
    def index(self) -> tuple[int, int]:
        return (self.k, self.h)

    @property
    def homogeneity(self) -> int:
        return self.k + self.h

    def __bool__(self) -> bool:
        return bool(self.p) or bool(self.q)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HarmonicElement):
            return NotImplemented
        return (self.n, self.k, self.h, self.delta, self.p, self.q) == (
            other.n, other.k, other.h, other.delta, other.p, other.q)

    def __hash__(self):
        return hash((self.n, self.k, self.h, self.delta, self.p, self.q))

    def __add__(self, other: "HarmonicElement") -> "HarmonicElement":
        if (self.n, self.k, self.h, self.delta) != (other.n, other.k, other.h, other.delta):
            raise ValueError("cannot add elements of different spaces")
        return HarmonicElement._make(self.n, self.k, self.h, self.p + other.p,
                                     self.q + other.q, self.delta)

    def __neg__(self) -> "HarmonicElement":
        return self.scaled(-1)

    def __sub__(self, other: "HarmonicElement") -> "HarmonicElement":
        return self + (-other)

    def scaled(self, c) -> "HarmonicElement":
        return HarmonicElement._make(self.n, self.k, self.h, self.p * c, self.q * c, self.delta)

    def __repr__(self) -> str:
        if self.delta:
            return f"HarmonicElement(delta * {self.p})"
        body = f"({self.p})|x|^{self.h}"
        if self.q:
            body += f" + ({self.q})|x|^{self.h} log|x|"
        return f"HarmonicElement[{self.k},{self.h}]({body})"

    def value(self, point) -> float:
        """Pointwise value away from the origin (floats)."""
        import math

        if self.delta:
            raise ValueError("the point mass has no pointwise value")
        r = math.sqrt(sum(float(x) ** 2 for x in point))
        if r == 0:
            raise ValueError("evaluation at the origin")
        out = self.p.evaluate_float(point) * r ** self.h
        if self.q:
            out += self.q.evaluate_float(point) * r ** self.h * math.log(r)
        return out


def element_norm_sq(f: HarmonicElement) -> Fraction:
    """``int_{S^{n-1}} (p^2 + q^2)`` in units of the sphere's total measure."""
    if f.delta:
        raise ValueError("the point mass has no L2 norm")
    return sphere_inner(f.p, f.p) + sphere_inner(f.q, f.q)


class HSeries:
    """Finitely supported element of ``prod H^{k,h}``, keyed by ``(k, h)``."""

    __slots__ = ("n", "_entries")

    def __init__(self, n: int, elements: Iterable[HarmonicElement] = ()):
        self.n = n
        acc: dict[tuple[int, int], HarmonicElement] = {}
        for f in elements:
            if f.n != n:
                raise ValueError("dimension mismatch")
            key = f.index
            acc[key] = acc[key] + f if key in acc else f
        self._entries = {key: f for key, f in acc.items() if f}

    @classmethod
    def _raw(cls, n: int, entries: dict) -> "HSeries":
        obj = cls.__new__(cls)
        obj.n = n
        obj._entries = entries
        return obj

    @classmethod
    def zero(cls, n: int) -> "HSeries":
        return cls._raw(n, {})

    @classmethod
    def delta(cls, n: int, c=1) -> "HSeries":
        return cls(n, [HarmonicElement.point_mass(n, c)])

    # -- mapping protocol -------------------------------------------------

    def __getitem__(self, key: tuple[int, int]) -> HarmonicElement:
        f = self._entries.get(tuple(key))
        if f is None:
            k, h = key
            return HarmonicElement._make(self.n, k, h, MultiPoly.zero(self.n), MultiPoly.zero(self.n))
        return f

    def __contains__(self, key) -> bool:
        return tuple(key) in self._entries

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self._entries, key=lambda kh: (kh[0] + kh[1], kh[0], kh[1])))

    def __len__(self) -> int:
        return len(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    def items(self):
        return [(key, self._entries[key]) for key in self]

    def elements(self) -> list[HarmonicElement]:
        return [self._entries[key] for key in self]

    def support(self) -> set[tuple[int, int]]:
        return set(self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HSeries):
            return NotImplemented
        return self.n == other.n and self._entries == other._entries

    def __repr__(self) -> str:
        inner = ", ".join(f"{key}: {f!r}" for key, f in self.items())
        return f"HSeries(n={self.n}, {{{inner}}})"

    # -- linear structure -------------------------------------------------

    def __add__(self, other: "HSeries") -> "HSeries":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        out = dict(self._entries)
        for key, f in other._entries.items():
            if key in out:
                g = out[key] + f
                if g:
                    out[key] = g
                else:
                    del out[key]
            else:
                out[key] = f
        return HSeries._raw(self.n, out)

    def __neg__(self) -> "HSeries":
        return self.scale(-1)

    def __sub__(self, other: "HSeries") -> "HSeries":
        return self + (-other)

    def scale(self, c) -> "HSeries":
        c = Fraction(c)
        if not c:
            return HSeries.zero(self.n)
        return HSeries._raw(self.n, {key: f.scaled(c) for key, f in self._entries.items()})

    # -- views ------------------------------------------------------------

    @property
    def delta_coefficient(self) -> Fraction:
        f = self._entries.get((0, -self.n))
        return f.p.constant_term() if f is not None and f.delta else Fraction(0)

    def without_delta(self) -> "HSeries":
        return HSeries._raw(self.n, {key: f for key, f in self._entries.items() if not f.delta})

    def truncated(self, max_homogeneity: int) -> "HSeries":
        return HSeries._raw(self.n, {key: f for key, f in self._entries.items()
                                     if key[0] + key[1] <= max_homogeneity})

    def outside_omega(self) -> list[tuple[int, int]]:
        return sorted(key for key, f in self._entries.items()
                      if not f.delta and not in_omega(self.n, *key))

    def value(self, point) -> float:
        return sum(f.value(point) for f in self._entries.values() if not f.delta)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> list[dict]:
        out = []
        for (k, h), f in self.items():
            rec = {"k": k, "h": h, "p": f.p.to_records(), "q": f.q.to_records()}
            if f.delta:
                rec["delta"] = True
            out.append(rec)
        return out

    @classmethod
    def from_json(cls, n: int, records: Iterable[Mapping]) -> "HSeries":
        elems = []
        for rec in records:
            p = MultiPoly.from_records(n, rec.get("p", []))
            q = MultiPoly.from_records(n, rec.get("q", []))
            elems.append(HarmonicElement(n, int(rec["k"]), int(rec["h"]), p, q,
                                         delta=bool(rec.get("delta", False))))
        return cls(n, elems)


def series_add(a: HSeries, b: HSeries) -> HSeries:
    return a + b


def series_scale(a: HSeries, c) -> HSeries:
    return a.scale(c)
