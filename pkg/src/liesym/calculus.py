"""Partial and total derivatives."""

from __future__ import annotations

from typing import Iterable

from liesym.expr import (
    HALF,
    INDEPENDENT,
    MAX_JET_ORDER,
    MINUS_ONE,
    ONE,
    ZERO,
    Expr,
    Func,
    FuncDeriv,
    Jet,
    Power,
    Product,
    Rational,
    Sum,
    Symbol,
    add,
    as_expr,
    func,
    mul,
    power,
)
from liesym.normal import normalize


class JetOrderError(ValueError):
    pass


def _atom(s) -> Expr:
    if isinstance(s, str):
        return Symbol(s)
    return s


def _depends(e: Expr, s: Expr) -> bool:
    atoms = e.free_atoms
    if s in atoms:
        return True
    return any(isinstance(a, FuncDeriv) and _d_funcderiv(a, s) != ZERO for a in atoms)


def _d(e: Expr, s: Expr, cache: dict) -> Expr:
    if not _depends(e, s):
        return ZERO
    if isinstance(e, (Symbol, Jet)):
        return ONE if e == s else ZERO
    hit = cache.get(e)
    if hit is not None:
        return hit
    if isinstance(e, FuncDeriv):
        out = _d_funcderiv(e, s)
    elif isinstance(e, Sum):
        out = add(*(_d(t, s, cache) for t in e.terms))
    elif isinstance(e, Product):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            df = _d(f, s, cache)
            if df != ZERO:
                parts.append(mul(*fs[:i], df, *fs[i + 1 :]))
        out = add(*parts)
    elif isinstance(e, Power):
        b, x = e.base, e.exponent
        db = _d(b, s, cache)
        dx = _d(x, s, cache)
        if dx == ZERO:
            out = mul(x, power(b, add(x, MINUS_ONE)), db)
        else:
            out = mul(e, add(mul(dx, func("ln", b)), mul(x, db, power(b, MINUS_ONE))))
    elif isinstance(e, Func):
        a = e.arg
        da = _d(a, s, cache)
        k = e.kind
        if k == "exp":
            g = e
        elif k == "ln":
            g = power(a, MINUS_ONE)
        elif k == "sqrt":
            g = mul(HALF, power(e, MINUS_ONE))
        elif k == "sin":
            g = func("cos", a)
        elif k == "cos":
            g = mul(MINUS_ONE, func("sin", a))
        elif k == "tanh":
            g = add(ONE, mul(MINUS_ONE, power(e, as_expr(2))))
        elif k == "arctan":
            g = power(add(ONE, power(a, as_expr(2))), MINUS_ONE)
        else:  # pragma: no cover
            raise ValueError(k)
        out = mul(g, da)
    else:
        out = ZERO
    cache[e] = out
    return out


def _d_funcderiv(e: FuncDeriv, s: Expr) -> Expr:
    if isinstance(s, Symbol) and s.name in e.args:
        return e.extend(s.name)
    if isinstance(s, Jet) and not s.derivs and s.root in e.args:
        return e.extend(s.root)
    return ZERO


def funcderiv_atoms(f: FuncDeriv) -> frozenset:
    """Atoms an unknown function depends on."""
    out = set()
    for a in f.args:
        out.add(Symbol(a) if a in INDEPENDENT else Jet(a, ()))
    return frozenset(out)


def diff(e: Expr, s, positive: Iterable[str] = (), normal: bool = True) -> Expr:
    """Exact partial derivative of ``e`` with respect to a Symbol or Jet."""
    s = _atom(s)
    out = _d(e, s, {})
    return normalize(out, positive) if normal else out


def total_derivative(e: Expr, wrt: str, positive: Iterable[str] = (), normal: bool = True) -> Expr:
    """``D_wrt e``: explicit dependence plus the chain rule through every jet."""
    jets = [a for a in e.free_atoms if isinstance(a, Jet)]
    deps = set(jets)
    for a in e.free_atoms:
        if isinstance(a, FuncDeriv):
            deps |= {j for j in funcderiv_atoms(a) if isinstance(j, Jet)}
    for j in deps:
        if j.order >= MAX_JET_ORDER:
            raise JetOrderError(f"total derivative of an order-{j.order} jet exceeds the supported order")
    cache: dict = {}
    terms = [_d(e, Symbol(wrt), cache)]
    for j in sorted(deps, key=lambda a: a.sort_key):
        dj = _d(e, j, {})
        if dj != ZERO:
            terms.append(mul(dj, j.extend(wrt)))
    out = add(*terms)
    return normalize(out, positive) if normal else out
