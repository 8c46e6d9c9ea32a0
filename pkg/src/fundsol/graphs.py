"""Weighted directed graphs on Z^2 that majorize the operator ``T``.

``G1`` has a self-loop, a "red" edge ``(k,h) -> (k-2,h+2)`` and a "blue"
edge ``(k,h) -> (k+2,h-2)``.  ``G2`` joins ``(k,h)`` to every other point of
``(k,h) + N(1,0) + N(-1,2)`` with weight 1.  Vertices are ``(k, h)`` tuples.

Every edge of ``G1 + G2`` keeps ``k + h`` constant or raises it, so all
walks are confined by ``k + h`` and an explicit Euclidean radius; ``G2``
out-neighborhoods are only ever enumerated inside such a region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "jap",
    "g1_weight",
    "g2_weight",
    "Region",
    "WeightedGraph",
    "G1",
    "G2",
    "GraphSum",
    "GraphProduct",
    "Indicator",
    "G1G2",
    "product_entry",
    "row_power",
    "sigma_member",
    "PathRecord",
    "enumerate_paths",
    "CruxFit",
    "crux_fit",
    "crossing_pair_bound",
    "path_count_fit",
    "support_violations",
]

Vertex = tuple


def jap(x: int) -> int:
    return 1 + abs(x)


def g1_weight(p: Vertex, q: Vertex) -> Fraction:
    (k, h), (k2, h2) = p, q
    if (k2, h2) == (k, h):
        return Fraction(1) if k >= 0 else Fraction(0)
    if (k2 - k, h2 - h) == (-2, 2) and k >= 2:
        return Fraction(jap(max(k, abs(h))), jap(h))
    if (k2 - k, h2 - h) == (2, -2) and k >= 0:
        return Fraction(jap(h), jap(max(k, abs(h))))
    return Fraction(0)


def _in_g2_cone(dx: int, dy: int) -> bool:
    # dx = a - b, dy = 2b with a, b >= 0
    return dy >= 0 and dy % 2 == 0 and dx >= -(dy // 2)


def g2_weight(p: Vertex, q: Vertex) -> Fraction:
    (k, h), (k2, h2) = p, q
    if k < 0 or k2 < 0 or (k, h) == (k2, h2):
        return Fraction(0)
    return Fraction(1) if _in_g2_cone(k2 - k, h2 - h) else Fraction(0)


def _norm(v: Vertex) -> float:
    return math.hypot(v[0], v[1])


@dataclass(frozen=True)
class Region:
    """``k >= 0``, ``k + h <= s_max`` and ``|v| <= radius`` (no bound when None)."""

    s_max: int
    radius: float | None = None

    def __contains__(self, v: Vertex) -> bool:
        k, h = v
        if k < 0 or k + h > self.s_max:
            return False
        return self.radius is None or k * k + h * h <= self.radius ** 2 + 1e-9


class WeightedGraph:
    """Rule plus out-edge enumerator restricted to a :class:`Region`."""

    g1_steps = 0  # G1 factors per edge, for the containment radius

    def weight(self, p: Vertex, q: Vertex) -> Fraction:
        raise NotImplementedError

    def out_edges(self, v: Vertex, region: Region) -> dict:
        raise NotImplementedError

    def containment_radius(self, p: Vertex, q: Vertex, ell: int) -> float:
        """Radius of a ball around the origin holding every ``ell``-edge path p -> q.

        ``G2`` displaces by at most ``sqrt(5)`` per unit of ``k + h``; each
        ``G1`` step moves at most ``2 sqrt(2)``.
        """
        ds = max(0, (q[0] + q[1]) - (p[0] + p[1]))
        return _norm(p) + math.sqrt(5) * ds + 2 * math.sqrt(2) * self.g1_steps * ell

    def __add__(self, other: "WeightedGraph") -> "GraphSum":
        return GraphSum(self, other)

    def __mul__(self, other: "WeightedGraph") -> "GraphProduct":
        return GraphProduct(self, other)


class _G1(WeightedGraph):
    g1_steps = 1

    def weight(self, p, q):
        return g1_weight(p, q)

    def out_edges(self, v, region):
        k, h = v
        out = {}
        if k < 0:
            return out
        for q in ((k, h), (k - 2, h + 2), (k + 2, h - 2)):
            if q in region:
                w = g1_weight(v, q)
                if w:
                    out[q] = w
        return out

    def __repr__(self):
        return "G1"


class _G2(WeightedGraph):
    def weight(self, p, q):
        return g2_weight(p, q)

    def out_edges(self, v, region):
        k, h = v
        out = {}
        if k < 0:
            return out
        room = region.s_max - (k + h)
        one = Fraction(1)
        for b in range(room + 1):
            for a in range(room - b + 1):
                if a == b == 0:
                    continue
                q = (k + a - b, h + 2 * b)
                if q in region:
                    out[q] = one
        return out

    def __repr__(self):
        return "G2"


G1 = _G1()
G2 = _G2()


class GraphSum(WeightedGraph):
    def __init__(self, *parts: WeightedGraph):
        self.parts = parts
        self.g1_steps = max(p.g1_steps for p in parts)

    def weight(self, p, q):
        return sum((g.weight(p, q) for g in self.parts), Fraction(0))

    def out_edges(self, v, region):
        out: dict = {}
        for g in self.parts:
            for q, w in g.out_edges(v, region).items():
                out[q] = out.get(q, 0) + w
        return out

    def __repr__(self):
        return " + ".join(map(repr, self.parts))


class GraphProduct(WeightedGraph):
    """``(A . B)(p, q) = sum_r A(p, r) B(r, q)``."""

    def __init__(self, *factors: WeightedGraph):
        self.factors = factors
        self.g1_steps = sum(f.g1_steps for f in factors)

    def weight(self, p, q):
        region = Region(q[0] + q[1])
        row = {p: Fraction(1)}
        for f in self.factors:
            row = _step(f, row, region)
        return row.get(q, Fraction(0))

    def out_edges(self, v, region):
        row = {v: Fraction(1)}
        for f in self.factors:
            row = _step(f, row, region)
        return row

    def __repr__(self):
        return " . ".join(f"({f!r})" for f in self.factors)


class Indicator(WeightedGraph):
    """Same edges as ``graph``, every weight set to 1."""

    def __init__(self, graph: WeightedGraph):
        self.graph = graph
        self.g1_steps = graph.g1_steps

    def weight(self, p, q):
        return Fraction(1) if self.graph.weight(p, q) else Fraction(0)

    def out_edges(self, v, region):
        return {q: Fraction(1) for q, w in self.graph.out_edges(v, region).items() if w}

    def __repr__(self):
        return f"1[{self.graph!r}]"


G1G2 = GraphProduct(G1, G2)


def _step(graph: WeightedGraph, row: dict, region: Region) -> dict:
    out: dict = {}
    for v, wv in row.items():
        for q, w in graph.out_edges(v, region).items():
            out[q] = out.get(q, 0) + wv * w
    return {q: w for q, w in out.items() if w}


def row_power(graphs: Sequence[WeightedGraph], p: Vertex, region: Region) -> dict:
    """Row ``p`` of the product of ``graphs`` (applied left to right) inside ``region``."""
    row = {tuple(p): Fraction(1)}
    for g in graphs:
        row = _step(g, row, region)
    return row


def product_entry(graphs: Sequence[WeightedGraph], p: Vertex, q: Vertex,
                  radius: float | None = None) -> Fraction:
    """Exact ``(graphs[0] . graphs[1] . ...)(p, q)`` by dynamic programming."""
    p, q = tuple(p), tuple(q)
    if radius is None:
        ds = max(0, q[0] + q[1] - p[0] - p[1])
        steps = sum(g.g1_steps for g in graphs)
        radius = _norm(p) + math.sqrt(5) * ds + 2 * math.sqrt(2) * steps
    return row_power(graphs, p, Region(q[0] + q[1], radius)).get(q, Fraction(0))


def sigma_member(ell: int, v: Vertex) -> bool:
    """Membership in the cone that confines ``ell``-fold ``G1 . G2`` steps."""
    x, y = v
    return (x + y >= ell and y >= -2 * ell and 4 * x + 3 * y >= 0
            and 2 * x + 3 * y >= 0 and y % 2 == 0)


def support_violations(ell: int, origin: Vertex, support: Iterable[Vertex]) -> list:
    """Points whose offset from ``origin`` leaves the ``ell`` cone."""
    ox, oy = origin
    return sorted(v for v in support if not sigma_member(ell, (v[0] - ox, v[1] - oy)))


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class PathRecord:
    vertices: tuple
    weight: Fraction
    max_radius_sq: int

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    def to_json(self) -> dict:
        return {
            "vertices": [list(v) for v in self.vertices],
            "weight": str(self.weight),
            "max_radius_sq": self.max_radius_sq,
        }


def _record(graph: WeightedGraph, verts: Sequence[Vertex]) -> PathRecord:
    w = Fraction(1)
    for a, b in zip(verts, verts[1:]):
        w *= graph.weight(a, b)
    return PathRecord(tuple(verts), w, max(v[0] ** 2 + v[1] ** 2 for v in verts))


def enumerate_paths(graph: WeightedGraph, p: Vertex, q: Vertex, ell: int,
                    box: float | None = None) -> list[PathRecord]:
    """All ``ell``-edge paths ``p -> q`` with positive weight.

    ``box`` must be at least the containment radius, otherwise paths could
    be missed and the call is rejected.
    """
    p, q = tuple(p), tuple(q)
    need = graph.containment_radius(p, q, ell)
    if box is None:
        box = need
    elif box + 1e-9 < need:
        raise ValueError(f"box radius {box} is below the containment radius {need:.3f}")
    region = Region(q[0] + q[1], box)
    if p not in region:
        return []
    out = []
    path = [p]

    def walk(v, left):
        if left == 0:
            if v == q:
                out.append(_record(graph, path))
            return
        for w in graph.out_edges(v, region):
            path.append(w)
            walk(w, left - 1)
            path.pop()

    walk(p, ell)
    return out


# ---------------------------------------------------------------------------
# empirical constants


@dataclass
class CruxFit:
    C: float
    path: PathRecord
    box: float
    max_len: int

    def to_json(self) -> dict:
        return {"fitted_C2": self.C, "box": self.box, "max_len": self.max_len,
                "max_path": self.path.to_json()}


def _crux_tables(box: int):
    verts = [(k, h) for k in range(0, box + 1) for h in range(-box, box + 1) if k * k + h * h <= box * box]
    K = np.array([v[0] for v in verts])
    H = np.array([v[1] for v in verts])
    dx = K[None, :] - K[:, None]
    dy = H[None, :] - H[:, None]
    W = np.full((len(verts), len(verts)), -np.inf)
    g2 = (dy >= 0) & (dy % 2 == 0) & (2 * dx >= -dy) & ~((dx == 0) & (dy == 0))
    W[g2] = 0.0
    np.fill_diagonal(W, 0.0)
    idx = {v: i for i, v in enumerate(verts)}
    for (k, h), i in idx.items():
        for q in ((k - 2, h + 2), (k + 2, h - 2)):
            j = idx.get(q)
            if j is not None:
                w = g1_weight((k, h), q)
                if w:
                    W[i, j] = max(W[i, j], math.log(w))
    r2 = K * K + H * H
    return verts, W, r2


def crux_fit(max_len: int, box: int) -> CruxFit:
    """Least ``C`` with ``weight <= C^{l + max|p_i|}`` over ``G1 + G2`` paths in the ball.

    Max-plus dynamic programming on log-weights, once per attainable
    squared radius; the maximizing path is rebuilt and its weight
    recomputed exactly.
    """
    verts, W, r2 = _crux_tables(box)
    best, arg = -np.inf, None
    for s in sorted(set(r2.tolist())):
        mask = r2 <= s
        Ws = W[np.ix_(mask, mask)]
        cur = np.zeros(mask.sum())
        rad = math.sqrt(s)
        for ell in range(1, max_len + 1):
            cur = (cur[:, None] + Ws).max(axis=0)
            val = cur.max() / (ell + rad)
            if val > best + 1e-15:
                best, arg = val, (s, ell)
    s, ell = arg
    mask = np.flatnonzero(r2 <= s)
    Ws = W[np.ix_(mask, mask)]
    cur = np.zeros(len(mask))
    back = []
    for _ in range(ell):
        tot = cur[:, None] + Ws
        back.append(tot.argmax(axis=0))
        cur = tot.max(axis=0)
    j = int(cur.argmax())
    chain = [j]
    for b in reversed(back):
        j = int(b[j])
        chain.append(j)
    path_v = [verts[mask[i]] for i in reversed(chain)]
    rec = _record(G1 + G2, path_v)
    C = float(rec.weight) ** (1.0 / (rec.length + math.sqrt(rec.max_radius_sq)))
    return CruxFit(C, rec, box, max_len)


def crossing_pair_bound(box: int) -> tuple[Fraction, tuple]:
    """Largest red-then-blue weight product across one horizontal line.

    A red edge from ``(x1, h-1)`` and a later blue edge from ``(x2, h+1)``;
    monotonicity of ``k + h`` along a path forces ``x2 >= x1 - 2``.
    """
    best, arg = Fraction(0), None
    for h in range(-box, box + 1):
        for x1 in range(2, box + 1):
            red = g1_weight((x1, h - 1), (x1 - 2, h + 1))
            for x2 in range(max(0, x1 - 2), box + 1):
                w = red * g1_weight((x2, h + 1), (x2 + 2, h - 1))
                if w > best:
                    best, arg = w, (h, x1, x2)
    return best, arg


def path_count_fit(p: Vertex, max_delta: int) -> tuple[float, dict]:
    """Fitted base ``max count^{1/|q-p|}`` for paths of any length in ``G1 . G2``.

    Counts paths using edges of the product graph (each edge once) from
    ``p`` to every ``q`` with ``0 < k+h - (p_k+p_h) <= max_delta``.
    """
    p = tuple(p)
    graph = Indicator(G1G2)
    s0 = p[0] + p[1]
    region = Region(s0 + max_delta, _norm(p) + 5 * max_delta + 2 * math.sqrt(2) * max_delta)
    counts: dict = {}
    row = {p: Fraction(1)}
    # each product edge raises k + h by at least 1
    for _ in range(max_delta):
        row = _step(graph, row, region)
        for q, c in row.items():
            counts[q] = counts.get(q, 0) + c
    base = 1.0
    for q, c in counts.items():
        d = _norm((q[0] - p[0], q[1] - p[1]))
        if d > 0:
            base = max(base, float(c) ** (1.0 / d))
    return base, counts
