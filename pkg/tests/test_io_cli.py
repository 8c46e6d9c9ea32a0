import json
import math
import random

import pytest

from fundsol.cli import main
from fundsol.expansion import build_expansion, normalize_A0
from fundsol.io import (
    EvalRequest,
    OperatorFormatError,
    evaluate,
    fixture_names,
    load_operator,
    newton_constant,
    parse_expansion,
    parse_operator,
    serialize_expansion,
    serialize_operator,
)
from fundsol.operators import OperatorSpec
from fundsol.poly import MultiPoly


def X(n, i):
    return MultiPoly.variable(n, i)


def rec(e, num, den=1):
    return {"e": list(e), "num": str(num), "den": str(den)}


def laplace_doc(n):
    return {
        "n": n,
        "A": [[[rec([0] * n, 1)] if i == j else [] for j in range(n)] for i in range(n)],
        "b": [[] for _ in range(n)],
        "c": [],
    }


# -- parsing ---------------------------------------------------------------


def test_parse_laplacian():
    for n in (2, 3):
        L, ref = parse_operator(json.dumps(laplace_doc(n))), OperatorSpec.laplacian(n)
        assert (L.n, L.A, L.b, L.c) == (ref.n, ref.A, ref.b, ref.c)


def test_parse_two_dimensional_fixture_exactly():
    L = load_operator("coord_change_2d")
    one, x1 = MultiPoly.constant(2, 1), X(2, 0)
    assert L.A[0][0] == one and L.A[0][1] == L.A[1][0] == x1 * 2
    assert L.A[1][1] == one + x1 * x1 * 4
    assert L.b[0] == MultiPoly.zero(2) and L.b[1] == one * 2 and not L.c


@pytest.mark.parametrize("mutate,field", [
    (lambda d: d["A"][0].__setitem__(1, [rec([1, 0], 1)]), "A"),
    (lambda d: d.__setitem__("b", [[]]), "b"),
    (lambda d: d["A"][0][0].append(rec([1, 0, 0], 1)), "A[0][0]"),
    (lambda d: d["A"][0][0][0].__setitem__("num", "1.5"), "num"),
    (lambda d: d["A"][0][0][0].__setitem__("den", "0"), "den"),
    (lambda d: d.pop("c"), "c"),
])
def test_parse_errors_name_the_field(mutate, field):
    doc = laplace_doc(2)
    mutate(doc)
    with pytest.raises(OperatorFormatError) as info:
        parse_operator(json.dumps(doc))
    assert field in str(info.value)


def test_parse_rejects_bad_json():
    with pytest.raises(OperatorFormatError):
        parse_operator("{not json")


def test_operator_round_trip():
    for name in fixture_names():
        L = load_operator(name)
        text = serialize_operator(L)
        assert parse_operator(text) == L
        assert serialize_operator(parse_operator(text)) == text


def test_expansion_round_trip():
    for name in ("coord_change_2d", "x1d11_3d", "aniso_2d"):
        norm = normalize_A0(load_operator(name))
        e = build_expansion(norm.operator, 3, normalized=norm)
        back = parse_expansion(serialize_expansion(e))
        assert back == e
        assert parse_expansion(serialize_expansion(back)) == back


# -- evaluation ------------------------------------------------------------


def test_newton_constants():
    assert newton_constant(2) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    assert newton_constant(3) == pytest.approx(-1 / (4 * math.pi), rel=1e-15)
    # |S^3| = 2 pi^2
    assert newton_constant(4) == pytest.approx(-1 / (4 * math.pi ** 2), rel=1e-15)


def test_evaluate_examples():
    e2 = build_expansion(OperatorSpec.laplacian(2), 2)
    assert evaluate(e2, EvalRequest((0.6, 0.8))) == pytest.approx(0, abs=1e-15)
    e3 = build_expansion(OperatorSpec.laplacian(3), 2)
    val = evaluate(e3, EvalRequest((0.5, 0, 0), normalization="geometric"))
    assert val == pytest.approx(-1 / (4 * math.pi * 0.5), rel=1e-13)
    assert val == pytest.approx(-0.159154943091895, rel=1e-12)


def test_newtonian_kernel_at_random_points():
    e3 = build_expansion(OperatorSpec.laplacian(3), 3)
    rng = random.Random(9)
    for _ in range(10):
        x = [rng.uniform(-2, 2) for _ in range(3)]
        r = math.sqrt(sum(v * v for v in x))
        got = evaluate(e3, EvalRequest(x, normalization="geometric"))
        assert got == pytest.approx(-1 / (4 * math.pi * r), rel=1e-12)


def test_anisotropic_leading_band():
    # A(0) = diag(1, 4): the constant-coefficient kernel is log|Q^{-1} y| / det Q
    norm = normalize_A0(load_operator("aniso_2d"))
    e = build_expansion(norm.operator, 2, normalized=norm)
    for y in [(0.3, -0.2), (1.0, 2.0), (-0.05, 0.4)]:
        want = math.log(math.hypot(y[0], y[1] / 2)) / 2
        assert evaluate(e, EvalRequest(y, max_band=0)) == pytest.approx(want, rel=1e-13)


def test_coordinate_change_example_differs_in_band_one():
    # the fixture is the Laplacian after x -> (x1, x2 + x1^2); log|Phi^{-1}(x)| is not the built solution
    e = build_expansion(load_operator("coord_change_2d"), 3)
    x1, x2 = X(2, 0), X(2, 1)
    assert e.band(1)[0] != -(x1 * x1 * x2)
    for t in (0.1, 0.01, 0.001):
        x = (t, t)
        pulled = math.log(math.hypot(x[0], x[1] - x[0] ** 2))
        diff = evaluate(e, EvalRequest(x, max_band=1)) - pulled
        # band-one mismatch is (x2^3 + x1^2 x2) / (4 |x|^2) = x2 / 4
        assert diff == pytest.approx(t / 4, rel=5 * t)


def test_evaluate_is_linear_in_bands():
    a = build_expansion(load_operator("x1d11_3d"), 3)
    b = build_expansion(load_operator("radial_perturbed_3d"), 3)
    s = parse_expansion(serialize_expansion(a))
    for ell in range(4):
        pa, pb = a.band(ell)[0], b.band(ell)[0]
        s.numerators[ell] = pa + pb
    rng = random.Random(2)
    for _ in range(10):
        x = [rng.uniform(-1, 1) for _ in range(3)]
        want = evaluate(a, EvalRequest(x)) + evaluate(b, EvalRequest(x))
        got = evaluate(s, EvalRequest(x))
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12 * abs(want))


def test_geometric_over_unit_is_the_constant():
    rng = random.Random(6)
    for name in ("coord_change_2d", "x1d11_3d", "laplace4d"):
        e = build_expansion(load_operator(name), 3)
        c = newton_constant(e.n)
        for _ in range(5):
            x = [rng.uniform(-1, 1) for _ in range(e.n)]
            u = evaluate(e, EvalRequest(x, normalization="unit"))
            g = evaluate(e, EvalRequest(x, normalization="geometric"))
            assert g == pytest.approx(c * u, rel=1e-14)


def test_evaluate_rejects_bad_requests():
    e = build_expansion(OperatorSpec.laplacian(3), 2)
    with pytest.raises(ValueError):
        EvalRequest((0, 0, 0))
    with pytest.raises(ValueError):
        evaluate(e, EvalRequest((1, 0, 0), max_band=3))
    with pytest.raises(ValueError):
        evaluate(e, EvalRequest((1, 0)))
    with pytest.raises(ValueError):
        EvalRequest((1, 0, 0), normalization="other")


# -- CLI -------------------------------------------------------------------


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_expand_laplacian(capsys):
    code, out, err = run(capsys, "expand", "--operator", "laplace3d.json", "--order", "4")
    assert code == 0 and "band" in err
    data = json.loads(out)
    nonzero = [b["ell"] for b in data["bands"] if b["p"] or b["log"]]
    assert nonzero == [0] and data["bands"][0]["p"] == [rec([0, 0, 0], 1)]


def test_cli_verify_and_lambda(capsys):
    code, out, _ = run(capsys, "verify", "--operator", "coord_change_2d", "--order", "5")
    assert code == 0 and json.loads(out)["ok"]
    code, out, _ = run(capsys, "lambda", "--operator", "x1d11_3d")
    assert code == 0 and json.loads(out)["lambda"] == 3
    code, out, _ = run(capsys, "lambda", "--operator", "laplace2d")
    assert json.loads(out)["lambda"] == "inf"


def test_cli_eval_from_saved_expansion(capsys, tmp_path):
    code, out, _ = run(capsys, "expand", "--operator", "laplace3d", "--order", "2")
    path = tmp_path / "e.json"
    path.write_text(out)
    code, out, _ = run(capsys, "eval", "--expansion", str(path), "--point", "0.5,0,0",
                       "--normalization", "geometric")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(-1 / (2 * math.pi), rel=1e-14)


def test_cli_eval_from_operator_with_default_normalization(capsys):
    code, out, _ = run(capsys, "eval", "--operator", "aniso_2d", "--point", "0.3,0.2", "--max-band", "0")
    assert code == 0
    data = json.loads(out)
    assert data["normalization"] == "unit"
    assert data["value"] == pytest.approx(math.log(math.hypot(0.3, 0.1)) / 2, rel=1e-13)


def test_cli_graph_and_decay(capsys):
    code, out, _ = run(capsys, "graph", "--max-len", "4", "--box", "8", "--operator", "x1d11_3d",
                       "--support-order", "2")
    data = json.loads(out)
    assert code == 0 and data["support_violations"] == [] and data["fitted_C2"] >= 1
    code, out, _ = run(capsys, "decay", "--operator", "x1d11_3d", "--scale", "1/2", "--order", "2")
    assert code == 0 and json.loads(out)["rows"]


def test_cli_validation_errors(capsys, caplog, tmp_path):
    doc = laplace_doc(2)
    doc["A"][0][1] = [rec([1, 0], 1)]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out, err = run(capsys, "expand", "--operator", str(bad))
    assert code == 2 and out == "" and "symmetric" in caplog.text
    code, _, _ = run(capsys, "verify", "--operator", "no_such_operator")
    assert code == 2
    code, _, _ = run(capsys, "eval", "--operator", "laplace2d", "--point", "0,0")
    assert code == 2


def test_cli_verify_failure_exit_code(capsys, monkeypatch):
    import fundsol.expansion as ex
    real = ex.t_powers
    monkeypatch.setattr(ex, "t_powers", lambda L, m, *a: [t.scale(2) if i == 1 else t for i, t in enumerate(real(L, m))])
    code, out, _ = run(capsys, "verify", "--operator", "x1d11_3d", "--order", "2")
    assert code == 3 and not json.loads(out)["ok"]
