import dataclasses

import pytest

from liesym.expr import ZERO
from liesym.inverse import (
    InverseError,
    family_from_ini,
    inverse_check,
    load_family,
    load_symmetry,
    recovers,
    same_coefficients,
    specialize,
    template_family,
    template_symmetry,
)
from liesym.models import load_model

from conftest import P

FNS = {"A'": "X + Z^2", "A''": "Y*Z", "B'": "X*Y", "B''": "1 + Z", "C'": "Z", "C''": "X + Y", "D'": "Y^2", "D''": "Z*X",
       "E'": "Z + Y", "E''": "X^2", "F'": "X*Z", "F''": "Y + 1", "G'": "X + Z", "G''": "Y*Z^2"}


def test_constraint_solved_for_linear_parameter():
    fam = load_family("power")
    assert fam.constraints["k"] == P("(m + v)/n", "m", "v", "n")
    assert fam.constraints["c3"] == ZERO


def test_power_family_needs_its_constraint():
    fam = load_family("power")
    loose = dataclasses.replace(fam, constraints={"c3": ZERO})
    rep = inverse_check(load_symmetry("ricci-type"), loose)
    assert not rep.ok and {e.label for e in rep.equations} == {"u_xy", "u_x*u_y"}


def test_exponential_family_needs_shift():
    fam = load_family("exponential")
    rep = inverse_check(load_symmetry("ricci-type"), dataclasses.replace(fam, constraints={"k": ZERO}))
    assert not rep.ok


def test_specialize_requires_bindings():
    with pytest.raises(InverseError):
        specialize(load_family("power"), {})


def test_power_family_n_equals_one():
    m = specialize(load_family("power"), {"n": 1})
    assert m.rhs() == P("u*u_xy + u_x*u_y")


def test_consistency_with_forward_solver():
    sym = load_symmetry("ricci-type")
    m = specialize(load_family("power"), {"n": 2})
    assert recovers(sym, m, {"m": 2, "v": 4, "k": 3, "c1": 1, "c2": -1, "c3": 0})
    # wrong weight is not a symmetry
    assert not recovers(sym, m, {"m": 2, "v": 4, "k": 1, "c1": 1, "c2": -1, "c3": 0})
    cd = specialize(load_family("convdiff-class"), {"c3": 1, "c4": 0, "c5": 0, "c6": 0, "c1": 1, "c2": 1}, keep=("v",))
    assert recovers(load_symmetry("convdiff-type"), cd, {"c1": 2, "c2": 1, "d3": 1, "d4": 3})


def test_misplaced_bracket_in_convective_family_fails():
    text = (
        "[family]\nname = misplaced\nparams = c1 c2 c3 c4 c5 c6 v\npositive = u\nC = c3*u\nD = c3*u\n"
        "E = sqrt(u)*(c4*cos(c2/c1*ln(u)) - c5*sin(c2/c1*ln(u)))\n"
        "F = sqrt(u)*(c4*sin(c2/c1*ln(u)) + c5*cos(c2/c1*ln(u)) - v)\nG = c6*u\n"
    )
    fam = family_from_ini(text)
    rep = inverse_check(load_symmetry("convdiff-type"), fam, samples=3)
    assert not rep.ok
    # and it does not degenerate to the convective-diffusion equation
    m = specialize(fam, {"c3": 1, "c4": 0, "c5": 0, "c6": 0, "c1": 1, "c2": 1}, keep=("v",))
    assert not same_coefficients(m, load_model("convdiff"))


@pytest.mark.parametrize("key", sorted(FNS))
def test_template_parts_with_derived_weights(key):
    assert inverse_check(template_symmetry(), template_family({key: FNS[key]})).ok


def test_template_full_instance():
    assert inverse_check(template_symmetry(), template_family(FNS)).ok


def test_template_k_zero_regime():
    fam = template_family({"A'": "exp(Z)", "B'": "exp(Z)", "C''": "Z", "G'": "Y*Z"}, k_zero=True)
    assert inverse_check(template_symmetry(), fam).ok
    fam = template_family({"A'": "exp(Z)", "B'": "exp(Z)"}, k_zero=True, constraints={"c3": "m + v"})
    assert specialize(fam, {"m": 1, "v": 1, "c1": 0, "c2": 0}).coeffs["A"] == P("exp(u)")


def test_family_file_errors():
    with pytest.raises(InverseError):
        family_from_ini("[family]\nparams = a\nconstraints = a + b\nA = u\n")
    with pytest.raises(InverseError):
        family_from_ini("[nope]\n")
    with pytest.raises(InverseError):
        load_symmetry("missing-symmetry")
