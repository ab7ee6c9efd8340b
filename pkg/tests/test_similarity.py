from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liesym.expr import Symbol, subs
from liesym.parsing import ParseContext, parse
from liesym.prolong import VectorField
from liesym.similarity import (
    REDUCED_CONTEXT,
    DomainExhausted,
    InvariantSet,
    NotReducible,
    SolutionCandidate,
    Unsupported,
    audit,
    invariants_of,
    jacobian_rank,
    proportional,
    reduce,
    sign_flip_repairs,
    solution_from_ini,
    verify_invariants,
    verify_reduced_solution,
    verify_solution,
)

from conftest import P

CTX = ParseContext(params=frozenset({"alpha", "beta", "v"}))
R = REDUCED_CONTEXT.with_params("alpha", "beta", "v", "q1", "q2", "q3", "q4")
ROT = VectorField.parse(xi="y", eta="-(x - v*t)", ctx=CTX)
SPIRAL = VectorField.parse(xi="(x - v*t)/2 + alpha*y", eta="y/2 - alpha*(x - v*t) + beta", phi="u", ctx=CTX)


def test_translation_invariants():
    inv = invariants_of(VectorField.parse(xi="1"))
    assert [str(i) for i in inv.invariants] == ["t", "y", "u"]


def test_scaling_invariants_are_invariant():
    v = VectorField.parse(xi="x", eta="beta*y", phi="-(1 + beta)*u", ctx=CTX)
    inv = invariants_of(v, {"x", "y", "u"})
    assert all(r.zero for r in verify_invariants(v, inv.invariants, {"x", "y", "u"}))
    assert set(jacobian_rank(inv.invariants, {"x", "y", "u"})) == {3}


def test_rotation_and_spiral_invariants():
    for v in (ROT, SPIRAL):
        inv = invariants_of(v)
        assert inv, inv
        assert all(r.zero for r in verify_invariants(v, inv.invariants))


def test_unsupported_is_explicit():
    out = invariants_of(VectorField.parse(xi="x^2", phi="u^2"))
    assert isinstance(out, Unsupported) and not out and out.reason


def test_noninvariant_candidate_flagged():
    r = verify_invariants(ROT, [P("x + y")])
    assert not r[0].zero


def test_spiral_family_is_not_reducible(convdiff):
    inv = invariants_of(SPIRAL)
    with pytest.raises(NotReducible):
        reduce(convdiff, inv)


def test_proportional_detects_sign_change(convdiff):
    inv = InvariantSet(ROT, (P("t"), P("v*t*x - (x^2)/2 - (y^2)/2", "v"), P("u")))
    r = reduce(convdiff, inv)
    good = parse("h_t + (2*z - v^2*t^2)*h*h_2z + 2*h*h_z + v^2*t*h_z", R)
    bad = parse("h_t + (2*z - v^2*t^2)*h*h_2z - 2*h*h_z + v^2*t*h_z", R)
    assert proportional(r, good).zero
    assert proportional(r, parse("3*z*(h_t + (2*z - v^2*t^2)*h*h_2z + 2*h*h_z + v^2*t*h_z)", R)).zero
    assert not proportional(r, bad).zero


def test_negative_control_solution_fails(ricci):
    # x/y^2 would pass: ln u is separable; the t factor breaks u_t = 0
    s = SolutionCandidate(P("t*x/y^2"), name="wrong")
    rep = verify_solution(ricci, s)
    assert not rep.ok and rep.witness


def test_conditions_restrict_domain(ricci):
    # u must stay positive on the Ricci domain
    s = SolutionCandidate(P("-1 - x^2"), name="negative")
    with pytest.raises(DomainExhausted):
        verify_solution(ricci, s)


def test_solution_file(convdiff):
    text = "[solution]\nname = s\nu = (q1/2*y^2 + q3*y + q4)/(q2 - q1*t)\nparams = q1 q2=3 q3 q4\nxi = 1\n"
    s = solution_from_ini(text, model=convdiff)
    assert s.params["q2"] == 3 and s.generator is not None
    rep = verify_solution(convdiff, s)
    assert rep.ok and rep.surface == 0


def test_audit_tries_repairs_only_on_failure(ricci):
    check = lambda text: verify_solution(ricci, SolutionCandidate(P(text), name=text))
    ok = audit("fine", "(1 + x)/y", check, [("x", "x^2")])
    assert ok.printed_ok and not ok.variants
    bad = audit("sign", "(1 + x)/y - 1/y^2", check, sign_flip_repairs("(1 + x)/y - 1/y^2"))
    assert not bad.printed_ok
    assert bad.variants


# -- round trip: reduced solutions lift to solutions of the full equation


@settings(max_examples=15, deadline=None)
@given(q1=st.fractions(-3, 3, max_denominator=4), q2=st.fractions(Fraction(1, 4), 3, max_denominator=4))
def test_reduction_round_trip_rotation(convdiff, q1, q2):
    inv = InvariantSet(ROT, (P("t"), P("v*t*x - (x^2)/2 - (y^2)/2", "v"), P("u")))
    red = reduce(convdiff, inv)
    h = parse("(2*z - v^2*t^2 + 2*q1)/(4*t + 2*q2)", R)
    params = {"q1": q1, "q2": q2}
    cond = [P("4*t + 2*q2", "q2")]
    rr = verify_reduced_solution(red, h, params=params, conditions=cond, grid=60)
    assert rr.ok
    u = inv.u_of(h)
    rep = verify_solution(convdiff, SolutionCandidate(u, dict(params, v=None), conditions=tuple(cond), generator=ROT), grid=60)
    assert rep.ok and rep.max_scaled <= 1e-8 and rep.surface <= 1e-8


@settings(max_examples=15, deadline=None)
@given(qs=st.lists(st.fractions(-3, 3, max_denominator=4), min_size=4, max_size=4).filter(lambda q: q[1] != 0))
def test_reduction_round_trip_translation(convdiff, qs):
    v = VectorField.parse(xi="1")
    inv = invariants_of(v)
    red = reduce(convdiff, inv)
    h = parse("(q1/2*z^2 + q3*z + q4)/(q2 - q1*t)", R)
    params = dict(zip(("q1", "q2", "q3", "q4"), qs))
    cond = [parse("(q2 - q1*t)^2", ParseContext(params=frozenset(params)))]
    assert verify_reduced_solution(red, h, params=params, conditions=cond, grid=60).ok
    rep = verify_solution(convdiff, SolutionCandidate(inv.u_of(h), dict(params, v=None), conditions=tuple(cond), generator=v), grid=60)
    assert rep.ok


# -- the Ricci equation is symmetric under x <-> y

PROFILES = ["1 + x + x^2", "exp(x)", "2 + sin(x)", "3 + tanh(x)", "1/(1 + x^2)"]


@settings(max_examples=10, deadline=None)
@given(profile=st.sampled_from(PROFILES))
def test_swap_symmetry(ricci, profile):
    u = P(f"({profile})/y")
    swapped = subs(u, {Symbol("x"): Symbol("y"), Symbol("y"): Symbol("x")})
    for cand in (u, swapped):
        assert verify_solution(ricci, SolutionCandidate(cand, positive=frozenset({"x", "y"})), grid=40).ok
