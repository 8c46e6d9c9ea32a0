"""Command-line entry point.

Machine-readable JSON goes to stdout; logs and human tables go to stderr.
Exit codes: 0 success, 2 validation error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction

from . import expansion as ex
from . import graphs
from .io import EvalRequest, OperatorFormatError, evaluate, fixture_names, load_operator, parse_expansion

log = logging.getLogger("fundsol")

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 2, 3


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=1)
    sys.stdout.write("\n")


def _normalized(ref: str):
    L = load_operator(ref)
    norm = ex.normalize_A0(L)
    if not norm.is_identity:
        log.info("A(0) != I: working in normalized coordinates, Q = %s",
                 [[str(v) for v in row] for row in norm.Q])
    if not norm.exact:
        log.warning("normalization is approximate")
    return L, norm


def _band_table(e: ex.ExpansionResult) -> str:
    lines = [f"{'band':>4}  {'denom':>5}  numerator / log term"]
    for ell in range(e.N + 1):
        p, lg = e.band(ell)
        pr, d = e.reduced[ell]
        text = f"({pr}) / |x|^{d}" if p else "0"
        if lg:
            text += f"   + ({lg}) log|x|"
        lines.append(f"{ell:>4}  {d:>5}  {text}")
    return "\n".join(lines)


def cmd_expand(args) -> int:
    _, norm = _normalized(args.operator)
    e = ex.build_expansion(norm.operator, args.order, args.normalization, normalized=norm)
    print(_band_table(e), file=sys.stderr)
    _emit(e.to_json())
    return EXIT_OK


def cmd_lambda(args) -> int:
    _, norm = _normalized(args.operator)
    rep = ex.compute_lambda(norm.operator)
    lam = "inf" if not rep.finite else int(rep.lam)
    print(f"lambda = {lam}   alpha = {rep.alpha}", file=sys.stderr)
    _emit(rep.to_json())
    return EXIT_OK


def cmd_verify(args) -> int:
    _, norm = _normalized(args.operator)
    try:
        ex.verify_neumann(norm.operator, args.order, all_orders=True)
    except ex.NeumannResidualError as err:
        log.error("%s", err)
        _emit({"ok": False, "order": err.order, "residual": err.residual.to_json()})
        return EXIT_FAILED
    print(f"residual identity holds exactly for orders 1..{args.order}", file=sys.stderr)
    _emit({"ok": True, "orders": args.order})
    return EXIT_OK


def cmd_graph(args) -> int:
    fit = graphs.crux_fit(args.max_len, args.box)
    n = args.dim
    origin = (0, -n)
    base, counts = graphs.path_count_fit(origin, args.count_delta)
    table = [{"q": list(q), "count": int(c)} for q, c in sorted(counts.items())]
    violations = []
    if args.operator:
        _, norm = _normalized(args.operator)
        L = norm.operator
        origin = (0, -L.n)
        for ell, t in enumerate(ex.t_powers(L, args.support_order)):
            if ell == 0:
                continue
            for v in sorted(t.support()):
                entry = graphs.product_entry([graphs.G1, graphs.G2] * ell, origin, v)
                if not entry or not graphs.sigma_member(ell, (v[0] - origin[0], v[1] - origin[1])):
                    violations.append({"ell": ell, "index": list(v)})
    print(f"fitted C2 = {fit.C:.6f} (box {args.box}, max_len {args.max_len}); "
          f"path-count base = {base:.4f}", file=sys.stderr)
    out = fit.to_json()
    out.update({"count_base": base, "counts_table": table, "support_violations": violations})
    _emit(out)
    return EXIT_FAILED if violations else EXIT_OK


def cmd_eval(args) -> int:
    point = [float(v) for v in args.point.split(",")]
    if args.expansion:
        with open(args.expansion) as fh:
            e = parse_expansion(fh.read())
    else:
        _, norm = _normalized(args.operator)
        e = ex.build_expansion(norm.operator, args.order, args.normalization or "unit", normalized=norm)
    req = EvalRequest(point, args.max_band, args.normalization)
    value = evaluate(e, req)
    print(f"u({args.point}) = {value:.15g}", file=sys.stderr)
    _emit({"point": point, "value": float(f"{value:.15g}"), "normalization": req.normalization or e.normalization})
    return EXIT_OK


def cmd_decay(args) -> int:
    _, norm = _normalized(args.operator)
    rep = ex.decay_diagnostic(norm.operator, Fraction(args.scale), args.order, args.max_weight)
    print(f"{'l':>3} {'k':>4} {'h':>5}  norm", file=sys.stderr)
    for ell, k, h, v in rep.rows:
        print(f"{ell:>3} {k:>4} {h:>5}  {v:.6e}", file=sys.stderr)
    print(f"fitted ratio = {rep.ratio:.6g}", file=sys.stderr)
    _emit(rep.to_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fundsol", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    op_help = f"operator JSON path or bundled fixture ({', '.join(fixture_names())})"

    p = sub.add_parser("expand", help="exact expansion bands")
    p.add_argument("--operator", required=True, help=op_help)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--normalization", choices=["unit", "geometric"], default="unit")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("lambda", help="denominator exponent parameter")
    p.add_argument("--operator", required=True, help=op_help)
    p.set_defaults(func=cmd_lambda)

    p = sub.add_parser("verify", help="exact residual identity up to an order")
    p.add_argument("--operator", required=True, help=op_help)
    p.add_argument("--order", type=int, default=4)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("graph", help="path-weight constant and support checks")
    p.add_argument("--max-len", type=int, default=6)
    p.add_argument("--box", type=int, default=15)
    p.add_argument("--dim", type=int, default=3, help="dimension for the path-count origin")
    p.add_argument("--count-delta", type=int, default=6)
    p.add_argument("--operator", help=op_help)
    p.add_argument("--support-order", type=int, default=3)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("eval", help="evaluate the truncated expansion at a point")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--operator", help=op_help)
    src.add_argument("--expansion", help="expansion JSON written by 'expand'")
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--max-band", type=int)
    p.add_argument("--normalization", choices=["unit", "geometric"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("decay", help="component norms of powers of T for a rescaled operator")
    p.add_argument("--operator", required=True, help=op_help)
    p.add_argument("--scale", default="1")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--max-weight", type=int, default=8)
    p.set_defaults(func=cmd_decay)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (OperatorFormatError, ValueError) as err:
        log.error("%s", err)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
