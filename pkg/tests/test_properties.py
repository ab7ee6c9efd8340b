"""Property suites over generated expressions and random algebra elements."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from liesym.algebra import adjoint
from liesym.calculus import diff
from liesym.evaluate import evaluate
from liesym.expr import Jet, Rational, Symbol, add, arctan, cos, exp, ln, mul, power, sin, sqrt, tanh
from liesym.normal import normalize
from liesym.optimal import load_algebra
from liesym.parsing import ParseContext, parse, to_string

CTX = ParseContext(params=frozenset({"a", "b"}))
ATOMS = [Symbol("x"), Symbol("y"), Symbol("t"), Symbol("a"), Symbol("b"), Jet("u"), Jet("u", ("x",)), Jet("u", ("x", "y"))]
FUNCS = [exp, ln, sqrt, sin, cos, tanh, arctan]

small_rational = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 4)).map(Rational)
leaf = st.one_of(st.sampled_from(ATOMS), small_rational)


def _pow(b, k):
    try:
        return power(b, Rational(k))
    except ZeroDivisionError:
        return b


def _extend(children):
    return st.one_of(
        st.lists(children, min_size=2, max_size=3).map(lambda xs: add(*xs)),
        st.lists(children, min_size=2, max_size=3).map(lambda xs: mul(*xs)),
        st.tuples(children, st.integers(-3, 3)).map(lambda p: _pow(*p)),
        st.tuples(st.sampled_from(FUNCS), children).map(lambda p: p[0](p[1])),
    )


exprs = st.recursive(leaf, _extend, max_leaves=8)


def _normal_or_none(e):
    try:
        return normalize(e)
    except ZeroDivisionError:
        return None


@settings(max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(exprs)
def test_parser_round_trip(e):
    n = _normal_or_none(e)
    if n is None:
        return
    assert parse(to_string(n), CTX) == n


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(exprs)
def test_normalize_idempotent(e):
    n = _normal_or_none(e)
    if n is None:
        return
    assert normalize(n) == n


# smooth expressions in positive x, y, t for finite differences
POS_ATOMS = [Symbol("x"), Symbol("y"), Symbol("t")]
smooth_leaf = st.one_of(st.sampled_from(POS_ATOMS), st.integers(1, 3).map(Rational))
SMOOTH = [exp, sin, cos, tanh, arctan]


def _smooth_extend(children):
    return st.one_of(
        st.lists(children, min_size=2, max_size=3).map(lambda xs: add(*xs)),
        st.lists(children, min_size=2, max_size=2).map(lambda xs: mul(*xs)),
        st.tuples(children, st.integers(1, 3)).map(lambda p: power(p[0], Rational(p[1]))),
        st.tuples(st.sampled_from(SMOOTH), children).map(lambda p: p[0](mul(Rational(Fraction(1, 3)), p[1]))),
        children.map(lambda c: ln(add(Rational(2), mul(c, c)))),
        children.map(lambda c: sqrt(add(Rational(1), mul(c, c)))),
    )


smooth = st.recursive(smooth_leaf, _smooth_extend, max_leaves=6)


@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(smooth, st.sampled_from(["x", "y", "t"]), st.integers(0, 2**31 - 1))
def test_derivative_matches_finite_difference(e, var, seed):
    rng = np.random.default_rng(seed)
    pt = {s: float(rng.uniform(0.5, 1.5)) for s in ("x", "y", "t")}
    d = diff(e, Symbol(var))
    h = 1e-5
    up, dn = dict(pt), dict(pt)
    up[var] += h
    dn[var] -= h
    fd = (evaluate(e, up) - evaluate(e, dn)) / (2 * h)
    an = evaluate(d, pt) if d.free_atoms else float(normalize(d).value) if isinstance(normalize(d), Rational) else evaluate(d, pt)
    if not (math.isfinite(fd) and math.isfinite(an)):
        return
    # central differences carry O(h^2) truncation and O(eps/h) rounding error
    scale = max(1.0, abs(an), abs(evaluate(e, pt)) if e.free_atoms else 1.0)
    assert abs(fd - an) <= 1e-6 * scale


@pytest.mark.parametrize("name", ["ricci", "convdiff"])
def test_jacobi_identity(name):
    alg = load_algebra(name).algebra
    assert alg.is_antisymmetric()
    assert alg.jacobi_defect() == []
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b, c = rng.normal(size=(3, alg.dim))
        j = alg.bracket(a, alg.bracket(b, c)) + alg.bracket(b, alg.bracket(c, a)) + alg.bracket(c, alg.bracket(a, b))
        assert np.abs(j).max() < 1e-12


@pytest.mark.parametrize("name", ["ricci", "convdiff"])
@settings(max_examples=40, deadline=None)
@given(i=st.integers(0, 3), eps=st.floats(-2, 2), seed=st.integers(0, 2**31 - 1))
def test_adjoint_preserves_brackets(name, i, eps, seed):
    alg = load_algebra(name).algebra
    g = adjoint(alg, i, eps).matrix
    a, b = np.random.default_rng(seed).normal(size=(2, alg.dim))
    lhs = g @ alg.bracket(a, b)
    rhs = alg.bracket(g @ a, g @ b)
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(1.0, np.abs(lhs).max())
