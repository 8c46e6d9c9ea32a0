"""Neumann-series construction of the fundamental solution.

``u = Lap^{-1} sum_l T^l delta`` is built exactly and regrouped by total
homogeneity into bands

    u = |x|^{2-n} sum_l p_l(x) / |x|^{2l}  +  log|x| sum_l v_l(x),

where ``p_l`` is homogeneous of degree ``3l`` and ``v_l`` of degree
``l + 2 - n`` (only present in even dimension).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .harmonic import HSeries, element_norm_sq, harmonic_decompose
from .operators import OperatorSpec, apply_L, apply_T, series_inv_laplacian
from .poly import MultiPoly, divide_by_r2, r2_power

log = logging.getLogger(__name__)

__all__ = [
    "NormalizedOperator",
    "normalize_A0",
    "rescale",
    "t_power_delta",
    "t_powers",
    "ExpansionResult",
    "build_expansion",
    "LambdaReport",
    "compute_lambda",
    "denominator_exponent",
    "NeumannResidualError",
    "neumann_residual",
    "verify_neumann",
    "StructureReport",
    "structure_check",
    "DecayReport",
    "decay_diagnostic",
    "rescale_bands",
]

INF = math.inf
SNAP_TOL = 1e-12


# ---------------------------------------------------------------------------
# preprocessing


@dataclass(frozen=True)
class NormalizedOperator:
    """Result of the ``A(0) = Q^2`` change of variables ``y = Q x``.

    ``operator`` has ``A(0) = I`` exactly.  The fundamental solution of the
    original operator is ``u(y) = u_tilde(Q^{-1} y) / det Q``.
    """

    Q: tuple
    Q_inv: tuple
    det_Q: Fraction
    operator: OperatorSpec
    exact: bool

    @property
    def is_identity(self) -> bool:
        n = len(self.Q)
        return all(self.Q[i][j] == (i == j) for i in range(n) for j in range(n))


def _mat_mul(X, Y):
    n = len(X)
    return [[sum(X[i][t] * Y[t][j] for t in range(n)) for j in range(n)] for i in range(n)]


def _mat_inv(X):
    # exact Gauss-Jordan over the rationals
    n = len(X)
    M = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(X)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col])
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [v / pv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col]:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [row[n:] for row in M]


def _det(X) -> Fraction:
    n = len(X)
    M = [[Fraction(v) for v in row] for row in X]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col]), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            det = -det
        det *= M[col][col]
        for r in range(col + 1, n):
            f = M[r][col] / M[col][col]
            M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return det


def _snap(value: float, tol: float = SNAP_TOL) -> tuple[Fraction, bool]:
    for limit in (10**3, 10**6, 10**9):
        c = Fraction(value).limit_denominator(limit)
        if abs(float(c) - value) <= tol * max(1.0, abs(value)):
            return c, True
    return Fraction(value), False


def _snap_poly(p: MultiPoly, tol: float) -> tuple[MultiPoly, bool]:
    ok = True
    terms = {}
    for e, c in p.items():
        s, good = _snap(float(c), tol)
        # exact values pass through untouched
        terms[e] = c if c.denominator <= 10**9 else s
        ok &= good or c.denominator <= 10**9
    return MultiPoly(p.n, terms), ok


def normalize_A0(L: OperatorSpec, tol: float = SNAP_TOL) -> NormalizedOperator:
    """Change variables so that the leading coefficient is the identity at 0.

    ``Q`` is the positive square root of ``A(0)``.  An exact rational root
    is used when one exists; otherwise the numeric root is snapped to
    rationals and the result is flagged inexact when snapping misses ``tol``.
    """
    n = L.n
    a0 = L.a0()
    ident = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    if L.is_normalized():
        return NormalizedOperator(_freeze(ident), _freeze(ident), Fraction(1), L, True)
    a0f = L.a0_float()
    w, V = np.linalg.eigh(a0f)
    if w.min() <= tol:
        raise ValueError("A(0) is not positive definite")
    qf = (V * np.sqrt(w)) @ V.T
    Q = [[_snap(float(v), tol)[0] for v in row] for row in qf]
    exact = _mat_mul(Q, Q) == a0
    if not exact:
        log.warning("A(0) has no rational square root; proceeding with snapped coefficients")
    Qi = _mat_inv(Q)
    A = [[p.substitute_linear(Q) for p in row] for row in L.A]
    b = [p.substitute_linear(Q) for p in L.b]
    c = L.c.substitute_linear(Q)
    At = [[sum((A[s][t] * (Qi[i][s] * Qi[t][j]) for s in range(n) for t in range(n)), MultiPoly.zero(n))
           for j in range(n)] for i in range(n)]
    bt = [sum((b[s] * Qi[i][s] for s in range(n)), MultiPoly.zero(n)) for i in range(n)]
    if not exact:
        snapped = []
        for row in At:
            out_row = []
            for p in row:
                sp, ok = _snap_poly(p, tol)
                exact &= ok
                out_row.append(sp)
            snapped.append(out_row)
        At = snapped
        # the constant block is the identity up to rounding; make it exact
        for i in range(n):
            for j in range(n):
                c0 = At[i][j].constant_term()
                target = Fraction(int(i == j))
                if abs(float(c0 - target)) > 1e-9:
                    raise ValueError("normalization failed to reach A(0) = I")
                At[i][j] = At[i][j] + MultiPoly.constant(n, target - c0)
    Lt = OperatorSpec(n, At, bt, c, L.name, L.description)
    return NormalizedOperator(_freeze(Q), _freeze(Qi), _det(Q), Lt, exact)


def _freeze(X) -> tuple:
    return tuple(tuple(Fraction(v) for v in row) for row in X)


def rescale(L: OperatorSpec, r) -> OperatorSpec:
    """``A(r x) d_ij + r b(r x) d_i + r^2 c(r x)``."""
    r = Fraction(r)
    if r <= 0:
        raise ValueError("scale must be positive")
    A = [[p.scale_vars(r) for p in row] for row in L.A]
    b = [p.scale_vars(r) * r for p in L.b]
    c = L.c.scale_vars(r) * (r * r)
    return OperatorSpec(L.n, A, b, c, L.name, L.description)


# ---------------------------------------------------------------------------
# powers of T


def t_powers(L: OperatorSpec, ell_max: int, max_homogeneity: int | None = None) -> list[HSeries]:
    """``[delta, T delta, ..., T^ell_max delta]``, optionally truncated by homogeneity."""
    if not L.is_normalized():
        raise ValueError("A(0) must be exactly the identity")
    cur = HSeries.delta(L.n)
    out = [cur]
    for _ in range(ell_max):
        cur = apply_T(L, cur, max_homogeneity) if cur else cur
        out.append(cur)
    return out


def t_power_delta(L: OperatorSpec, ell: int, max_homogeneity: int | None = None) -> HSeries:
    if ell < 0:
        raise ValueError("power must be nonnegative")
    return t_powers(L, ell, max_homogeneity)[-1]


# ---------------------------------------------------------------------------
# lambda


@dataclass(frozen=True)
class LambdaReport:
    alpha: MultiPoly
    lam: float
    witness: MultiPoly | None

    @property
    def finite(self) -> bool:
        return self.lam != INF

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha.to_records(),
            "alpha_str": str(self.alpha),
            "lambda": "inf" if not self.finite else int(self.lam),
            "witness": self.witness.to_records() if self.witness is not None else None,
        }


def compute_lambda(L: OperatorSpec) -> LambdaReport:
    """Smallest degree of ``sum (I - A)_ij x_i x_j`` not divisible by ``|x|^2``."""
    if not L.is_normalized():
        raise ValueError("A(0) must be exactly the identity")
    n = L.n
    a = L.perturbation()
    xs = [MultiPoly.variable(n, i) for i in range(n)]
    alpha = MultiPoly.zero(n)
    for i in range(n):
        for j in range(n):
            if a[i][j]:
                alpha = alpha + a[i][j] * xs[i] * xs[j]
    # a has no constant term, so alpha starts at degree 3; the check is total
    for d, part in alpha.homogeneous_parts().items():
        if divide_by_r2(part) is None:
            return LambdaReport(alpha, d, harmonic_decompose(part, d)[0])
    return LambdaReport(alpha, INF, None)


def denominator_exponent(ell: int, lam: float) -> int:
    """Even power of ``|x|`` left in the denominator of band ``ell``.

    ``2 * floor(ell / (lam - 2))``; zero when ``lam`` is infinite.
    """
    if lam == INF or ell == 0:
        return 0
    return 2 * (ell // (int(lam) - 2))


# ---------------------------------------------------------------------------
# expansion


@dataclass
class ExpansionResult:
    n: int
    N: int
    normalization: str
    numerators: dict
    log_terms: dict
    lam: float
    reduced: dict
    support: frozenset = frozenset()
    Q: tuple | None = None
    det_Q: Fraction = Fraction(1)
    exact: bool = True
    name: str = ""

    def band(self, ell: int) -> tuple[MultiPoly, MultiPoly]:
        z = MultiPoly.zero(self.n)
        return self.numerators.get(ell, z), self.log_terms.get(ell, z)

    def to_json(self) -> dict:
        bands = []
        for ell in range(self.N + 1):
            p, lg = self.band(ell)
            pr, e = self.reduced.get(ell, (MultiPoly.zero(self.n), 0))
            bands.append({
                "ell": ell,
                "p": p.to_records(),
                "p_reduced": pr.to_records(),
                "denom_exp": e,
                "log": lg.to_records(),
            })
        out = {
            "n": self.n,
            "name": self.name,
            "normalization": self.normalization,
            "N": self.N,
            "lambda": "inf" if self.lam == INF else int(self.lam),
            "exact": self.exact,
            "bands": bands,
        }
        if self.Q is not None:
            out["Q"] = [[str(v) for v in row] for row in self.Q]
            out["det_Q"] = str(self.det_Q)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ExpansionResult":
        n = int(data["n"])
        lam = INF if data["lambda"] == "inf" else int(data["lambda"])
        nums, logs, red = {}, {}, {}
        for b in data["bands"]:
            ell = int(b["ell"])
            p = MultiPoly.from_records(n, b["p"])
            lg = MultiPoly.from_records(n, b["log"])
            if p:
                nums[ell] = p
            if lg:
                logs[ell] = lg
            red[ell] = (MultiPoly.from_records(n, b["p_reduced"]), int(b["denom_exp"]))
        Q = tuple(tuple(Fraction(v) for v in row) for row in data["Q"]) if "Q" in data else None
        return cls(n, int(data["N"]), data["normalization"], nums, logs, lam, red,
                   Q=Q, det_Q=Fraction(data.get("det_Q", "1")), exact=bool(data.get("exact", True)),
                   name=data.get("name", ""))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExpansionResult):
            return NotImplemented
        return self.to_json() == other.to_json()


def _reduce(p: MultiPoly, ell: int, lam: float) -> tuple[MultiPoly, int]:
    e = denominator_exponent(ell, lam)
    q = p
    for _ in range((2 * ell - e) // 2):
        q = divide_by_r2(q)
        if q is None:
            raise ArithmeticError(f"band {ell}: numerator not divisible by |x|^{2 * ell - e}")
    return q, e


def build_expansion(L: OperatorSpec, N: int, normalization: str = "unit",
                    normalized: NormalizedOperator | None = None) -> ExpansionResult:
    """Bands ``0..N`` of the fundamental solution, exactly.

    Band ``l`` collects the components of total homogeneity ``l + 2 - n``;
    it only receives contributions from ``T^j delta`` with ``j <= l``.
    """
    if N < 0:
        raise ValueError("order must be nonnegative")
    if normalization not in ("unit", "geometric"):
        raise ValueError(f"unknown normalization {normalization!r}")
    if not L.is_normalized():
        raise ValueError("A(0) must be exactly the identity; run normalize_A0 first")
    n = L.n
    powers = t_powers(L, N, N - n)
    total = HSeries.zero(n)
    for t in powers:
        total = total + t
    u = series_inv_laplacian(total)
    nums: dict = {}
    logs: dict = {}
    for (k, h), f in u.items():
        ell = k + h + n - 2
        if ell > N:
            continue
        if f.p:
            expo = 2 * k + 3 * h + 3 * n - 6
            if expo < 0 or expo % 2:
                raise ArithmeticError(f"component ({k}, {h}) does not fit band {ell}")
            term = f.p * r2_power(n, expo // 2)
            nums[ell] = nums[ell] + term if ell in nums else term
        if f.q:
            if h < 0 or h % 2:
                raise ArithmeticError(f"log component at ({k}, {h})")
            term = f.q * r2_power(n, h // 2)
            logs[ell] = logs[ell] + term if ell in logs else term
    nums = {ell: p for ell, p in nums.items() if p}
    logs = {ell: p for ell, p in logs.items() if p}
    lam = compute_lambda(L).lam
    reduced = {}
    for ell in range(N + 1):
        p = nums.get(ell, MultiPoly.zero(n))
        try:
            reduced[ell] = _reduce(p, ell, lam)
        except ArithmeticError:
            # kept unreduced; structure_check reports it
            reduced[ell] = (p, 2 * ell)
    res = ExpansionResult(n, N, normalization, nums, logs, lam, reduced,
                          support=frozenset(key for key in u.support() if key[0] + key[1] + n - 2 <= N),
                          name=L.name)
    if normalized is not None:
        res.Q = normalized.Q
        res.det_Q = normalized.det_Q
        res.exact = normalized.exact
    return res


def rescale_bands(e: ExpansionResult, r) -> ExpansionResult:
    """Bands of ``x -> r^{n-2} u(r x)`` with the ``log r`` shift dropped.

    Each band is multiplied by ``r^l``.
    """
    r = Fraction(r)
    n = e.n
    nums = {ell: p.scale_vars(r) * r ** (-2 * ell) for ell, p in e.numerators.items()}
    logs = {ell: p.scale_vars(r) * r ** (n - 2) for ell, p in e.log_terms.items()}
    red = {ell: (p.scale_vars(r) * r ** (-e_exp), e_exp) for ell, (p, e_exp) in e.reduced.items()}
    return ExpansionResult(n, e.N, e.normalization, nums, logs, e.lam, red, e.support,
                           e.Q, e.det_Q, e.exact, e.name)


# ---------------------------------------------------------------------------
# exact residual identity


class NeumannResidualError(AssertionError):
    def __init__(self, order: int, residual: HSeries):
        self.order = order
        self.residual = residual
        comps = ", ".join(f"({k},{h})" for k, h in residual)
        super().__init__(f"nonzero residual at order {order}: components {comps}")


def neumann_residual(L: OperatorSpec, m: int, powers: Sequence[HSeries] | None = None) -> HSeries:
    """``L(Lap^{-1} sum_{l<m} T^l delta) - delta + T^m delta``."""
    if m < 1:
        raise ValueError("order must be at least 1")
    if powers is None or len(powers) <= m:
        powers = t_powers(L, m)
    partial = HSeries.zero(L.n)
    for t in powers[:m]:
        partial = partial + t
    u = series_inv_laplacian(partial)
    return apply_L(L, u) - HSeries.delta(L.n) + powers[m]


def verify_neumann(L: OperatorSpec, m: int, all_orders: bool = False) -> HSeries:
    """Check the residual identity exactly; raise on any nonzero component.

    Returns the (empty) residual.  With ``all_orders`` every order ``1..m``
    is checked.
    """
    powers = t_powers(L, m)
    orders = range(1, m + 1) if all_orders else [m]
    res = HSeries.zero(L.n)
    for order in orders:
        res = neumann_residual(L, order, powers)
        if res:
            raise NeumannResidualError(order, res)
    return res


# ---------------------------------------------------------------------------
# structure


@dataclass
class StructureReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def structure_check(e: ExpansionResult) -> StructureReport:
    n = e.n
    rep = StructureReport()
    for ell in range(e.N + 1):
        p, lg = e.band(ell)
        if p and (not p.is_homogeneous(3 * ell)):
            rep.violations.append((ell, f"numerator is not homogeneous of degree {3 * ell}"))
        if lg and not lg.is_homogeneous(ell + 2 - n):
            rep.violations.append((ell, f"log term is not homogeneous of degree {ell + 2 - n}"))
        if lg and n % 2:
            rep.violations.append((ell, "log term in odd dimension"))
        pr, ex = e.reduced.get(ell, (p, 0))
        want = denominator_exponent(ell, e.lam)
        if ex != want:
            rep.violations.append((ell, f"numerator not divisible by |x|^{2 * ell - want}"))
        elif p and pr * r2_power(n, (2 * ell - ex) // 2) != p:
            rep.violations.append((ell, "reduced numerator does not reconstruct"))
        if (e.lam != INF and ell >= 1 and ell % (int(e.lam) - 2) == 0
                and pr and divide_by_r2(pr) is not None):
            rep.violations.append((ell, "reduced numerator is divisible by |x|^2"))
    for k, h in e.support:
        if (h + n) % 2:
            rep.violations.append((k + h + n - 2, f"index ({k}, {h}) breaks parity"))
    return rep


# ---------------------------------------------------------------------------
# decay


@dataclass
class DecayReport:
    scale: Fraction
    rows: list
    ratio: float

    def to_json(self) -> dict:
        return {
            "scale": str(self.scale),
            "ratio": self.ratio,
            "rows": [{"ell": l, "k": k, "h": h, "norm": v} for l, k, h, v in self.rows],
        }


def decay_diagnostic(L: OperatorSpec, r, ell_max: int, max_weight: int = 8) -> DecayReport:
    """Norms of the components of ``T^l delta`` for the operator rescaled by ``r``.

    Rows cover ``1 <= l <= ell_max`` and ``k + h + n <= max_weight``.  The
    fitted ratio is the largest ``norm^{1/(k+h+n)}``.
    """
    Lr = rescale(L, r)
    n = L.n
    powers = t_powers(Lr, ell_max, max_weight - n)
    rows = []
    ratio = 0.0
    for ell, t in enumerate(powers):
        if ell == 0:
            continue
        for (k, h), f in t.items():
            w = k + h + n
            v = math.sqrt(float(element_norm_sq(f)))
            rows.append((ell, k, h, v))
            if w > 0 and v > 0:
                ratio = max(ratio, v ** (1.0 / w))
    return DecayReport(Fraction(r), rows, ratio)
