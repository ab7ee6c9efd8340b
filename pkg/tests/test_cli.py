import io
import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liesym.cli import run

SOL = Path(__file__).resolve().parent.parent / "solutions"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_symmetries_json():
    code, out, _ = call("symmetries", "--model", "ricci", "--degree", "1", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["dimension"] == 4 and doc["time_translation"]


def test_commutators_text():
    code, out, _ = call("commutators", "--model", "convdiff")
    assert code == 0 and "-V3/2" in out


def test_optimal_exit_codes():
    assert call("optimal", "--model", "convdiff", "--trials", "100")[0] == 0
    assert call("optimal", "--model", "ricci", "--trials", "200", "--pattern", "sparse")[0] == 1


def test_verify_solution_pass_and_fail():
    assert call("verify-solution", "--model", "convdiff", "--solution", str(SOL / "convdiff-rotation.ini"))[0] == 0
    code, out, _ = call("verify-solution", "--model", "convdiff", "--solution", str(SOL / "convdiff-spiral-ysquared.ini"), "--json")
    assert code == 1 and json.loads(out)["witness"]


def test_reduce_and_compare():
    code, out, _ = call(
        "reduce", "--model", "ricci", "--operator", "V1 + beta*V3", "--positive", "x,y,u",
        "--compare", "h_t*h^2*z^(-1/beta-2) + beta*h*h_2z + beta*z^(-1)*h*h_z - beta*h_z^2",
    )
    assert code == 0 and "proportional to the given equation: True" in out


def test_reduce_not_reducible():
    assert call("reduce", "--model", "convdiff", "--operator", "V1 + alpha*V2 + beta*V4")[0] == 1


def test_verify_reduced():
    code, _, _ = call("verify-reduced", "--equation", "h_t - 2*(alpha^2 + 1/4)*h^2", "--h", "-1/(2*(alpha^2 + 1/4)*t - gamma)",
                      "--params", "alpha,gamma")
    assert code == 0


def test_inverse():
    assert call("inverse", "--symmetry", "ricci-type", "--family", "power")[0] == 0


def test_parse_echo():
    code, out, _ = call("parse", "(x^2)/2 + (x^2)/2")
    assert code == 0 and out.strip() == "x^2"


def test_json_is_deterministic():
    a = call("optimal", "--model", "ricci", "--trials", "50", "--json", "--seed", "7")[1]
    b = call("optimal", "--model", "ricci", "--trials", "50", "--json", "--seed", "7")[1]
    assert a == b


def test_tolerance_env_override(monkeypatch):
    monkeypatch.setenv("LIESYM_TOL", "1e-6")
    doc = json.loads(call("parse", "x", "--json")[1])
    assert doc["tol"] == 1e-6


@pytest.mark.parametrize(
    "argv",
    [[], ["frob"], ["symmetries"], ["symmetries", "--model", "nope"], ["parse", "x +"], ["symmetries", "--model", "ricci", "--degree", "-1"],
     ["reduce", "--model", "ricci", "--operator", "V1*V2"], ["verify-solution", "--model", "ricci", "--solution", "/no/such/file"],
     ["inverse", "--symmetry", "x", "--family", "y"]],
)
def test_usage_errors_exit_2(argv):
    assert call(*argv)[0] == 2


@settings(max_examples=60, deadline=None)
@given(st.text(alphabet="xyu_^*/()+-0123456789 abc,.", max_size=20))
def test_malformed_expressions_never_crash(text):
    code, _, err = call("parse", text)
    assert code in (0, 2)
    assert "Traceback" not in err
