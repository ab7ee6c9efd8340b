"""Canonical forms: expanded (Laurent) polynomials over atoms, and quotients.

An expression is brought to a :class:`RatFunc`: an expanded numerator
:class:`Poly` over *monomials* divided by a product of canonical
multi-term polynomial factors.  A monomial is a sorted tuple of
``(base, exponent)`` pairs.  Bases are atoms (symbols, jets, unknown-function
derivatives, non-exp function applications), ``exp(...)`` (at most one per
monomial, exponent 1), or opaque composite bases carrying a non-integer
exponent whose constant part lies in ``[0, 1)``.

Cancellation uses exact multivariate division only; there is no gcd.  Two
equal rational functions may therefore normalize to different quotients, but
their difference always normalizes to zero because addition brings both over
a common factored denominator and expands the numerator.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable

from liesym.expr import (
    HALF,
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
    mul,
    power,
)

Monomial = tuple  # tuple[(base Expr, exponent Expr), ...] sorted by base.sort_key
UNIT: Monomial = ()

_SIMPLE = (Symbol, Jet, FuncDeriv)


def _mono_key(m: Monomial) -> tuple:
    return tuple((b.sort_key, e.sort_key) for b, e in m)


def _is_int(e: Expr) -> bool:
    return isinstance(e, Rational) and e.value.denominator == 1


def _is_exp(b: Expr) -> bool:
    return isinstance(b, Func) and b.kind == "exp"


def _is_composite_base(b: Expr) -> bool:
    return isinstance(b, (Sum, Product, Rational, Power))


class Poly:
    """Sparse polynomial: ``{monomial: Fraction}`` with no zero coefficients."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict | None = None):
        self.terms = terms if terms is not None else {}
        self._hash = None

    @staticmethod
    def const(c) -> "Poly":
        c = Fraction(c)
        return Poly({UNIT: c} if c else {})

    @staticmethod
    def mono(m: Monomial, c=1) -> "Poly":
        c = Fraction(c)
        return Poly({m: c} if c else {})

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and UNIT in self.terms)

    def const_value(self) -> Fraction:
        return self.terms.get(UNIT, Fraction(0)) if self.is_const() else None

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __repr__(self):
        return f"Poly({to_expr(RatFunc(self))})"

    def leading(self) -> tuple:
        m = max(self.terms, key=_mono_key)
        return m, self.terms[m]

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if c == 0:
            return Poly()
        if c == 1:
            return self
        return Poly({m: v * c for m, v in self.terms.items()})

    def __neg__(self):
        return self.scale(-1)

    def __add__(self, other: "Poly") -> "Poly":
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, v in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = v
            else:
                s += v
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Poly(out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + other.scale(-1)

    def __mul__(self, other: "Poly") -> "Poly":
        rf = poly_mul(self, other, _default())
        if rf.den:
            raise ValueError("polynomial product produced a denominator")
        return rf.num

    def pow(self, k: int) -> "Poly":
        out = Poly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def atoms(self) -> set:
        return {b for m in self.terms for b, _ in m}

    def content(self) -> Fraction:
        """Positive rational content: gcd of numerators over lcm of denominators."""
        g, l = 0, 1
        for v in self.terms.values():
            g = math.gcd(g, v.numerator)
            l = l * v.denominator // math.gcd(l, v.denominator)
        return Fraction(g, l) if g else Fraction(1)

    def div_exact(self, other: "Poly", laurent: bool = False) -> "Poly | None":
        """Exact quotient, or None.  Negative powers only when ``laurent``."""
        return _div_exact(self, other, laurent)


def _merge(m1: Monomial, m2: Monomial, nz: "Normalizer"):
    """Multiply two monomials.  Returns ``(monomial, None)`` or ``(None, RatFunc)``."""
    if not m1:
        return m2, None
    if not m2:
        return m1, None
    d = dict(m1)
    special = False
    for b, e in m2:
        old = d.get(b)
        if old is None:
            d[b] = e
            continue
        if isinstance(old, Rational) and isinstance(e, Rational):
            s = Rational(old.value + e.value)
        else:
            s = nz.normalize(add(old, e))
        if isinstance(b, _SIMPLE) or (isinstance(b, Func) and b.kind != "exp"):
            if s == ZERO:
                del d[b]
            else:
                d[b] = s
        else:
            d[b] = s
            special = True
    if not special:
        n_exp = 0
        for b in d:
            if _is_exp(b):
                n_exp += 1
        if n_exp > 1:
            special = True
    if not special:
        return tuple(sorted(d.items(), key=lambda be: be[0].sort_key)), None
    plain, exps = [], []
    out = RatFunc.one()
    for b, e in d.items():
        if _is_exp(b):
            exps.append(b.arg if e == ONE else mul(e, b.arg))
        elif _is_composite_base(b):
            out = rf_mul(out, nz.atom_power(b, e), nz)
        else:
            plain.append((b, e))
    res = RatFunc(Poly.mono(tuple(sorted(plain, key=lambda be: be[0].sort_key))))
    if exps:
        res = rf_mul(res, nz.exp_nf(nz.normalize(add(*exps))), nz)
    return None, rf_mul(res, out, nz)


def poly_mul(p: Poly, q: Poly, nz: "Normalizer") -> "RatFunc":
    if not p.terms or not q.terms:
        return RatFunc.zero()
    acc: dict = {}
    extra = None
    for m1, c1 in p.terms.items():
        for m2, c2 in q.terms.items():
            m, rf = _merge(m1, m2, nz)
            c = c1 * c2
            if rf is None:
                s = acc.get(m)
                if s is None:
                    acc[m] = c
                else:
                    s += c
                    if s:
                        acc[m] = s
                    else:
                        del acc[m]
            else:
                term = rf_scale(rf, c)
                extra = term if extra is None else rf_add(extra, term, nz)
    out = RatFunc(Poly(acc))
    if extra is not None:
        out = rf_add(out, extra, nz)
    return out


class RatFunc:
    """``num / prod(f ** k for f, k in den.items())`` with canonical factors ``f``."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: dict | None = None):
        self.num = num
        self.den = den or {}

    @staticmethod
    def zero() -> "RatFunc":
        return RatFunc(Poly())

    @staticmethod
    def one() -> "RatFunc":
        return RatFunc(Poly.const(1))

    @staticmethod
    def const(c) -> "RatFunc":
        return RatFunc(Poly.const(c))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return not self.den

    def __repr__(self):
        return f"RatFunc({to_expr(self)})"


def rf_scale(a: RatFunc, c) -> RatFunc:
    return RatFunc(a.num.scale(c), a.den) if c else RatFunc.zero()


def _expand_den(factors: dict, nz) -> Poly:
    out = Poly.const(1)
    for f, k in factors.items():
        for _ in range(k):
            out = poly_mul(out, f, nz).num
    return out


def rf_add(a: RatFunc, b: RatFunc, nz) -> RatFunc:
    if a.num.is_zero():
        return b
    if b.num.is_zero():
        return a
    if a.den == b.den:
        return RatFunc(a.num + b.num, a.den)
    lcm = dict(a.den)
    for f, k in b.den.items():
        if lcm.get(f, 0) < k:
            lcm[f] = k
    fa = {f: k - a.den.get(f, 0) for f, k in lcm.items() if k > a.den.get(f, 0)}
    fb = {f: k - b.den.get(f, 0) for f, k in lcm.items() if k > b.den.get(f, 0)}
    na = poly_mul(a.num, _expand_den(fa, nz), nz).num if fa else a.num
    nb = poly_mul(b.num, _expand_den(fb, nz), nz).num if fb else b.num
    return RatFunc(na + nb, lcm)


def rf_mul(a: RatFunc, b: RatFunc, nz) -> RatFunc:
    if a.num.is_zero() or b.num.is_zero():
        return RatFunc.zero()
    prod = poly_mul(a.num, b.num, nz)
    den = dict(a.den)
    for f, k in b.den.items():
        den[f] = den.get(f, 0) + k
    for f, k in prod.den.items():
        den[f] = den.get(f, 0) + k
    return RatFunc(prod.num, den)


def _monomial_inverse(m: Monomial, nz) -> RatFunc:
    out = RatFunc.one()
    for b, e in m:
        if isinstance(e, Rational):
            ne = Rational(-e.value)
        else:
            ne = nz.normalize(mul(MINUS_ONE, e))
        out = rf_mul(out, nz.atom_power(b, ne), nz)
    return out


def rf_inv(a: RatFunc, nz) -> RatFunc:
    if a.num.is_zero():
        raise ZeroDivisionError("division by an expression that normalizes to zero")
    num = _expand_den(a.den, nz) if a.den else Poly.const(1)
    out = RatFunc(num)
    if a.num.is_monomial():
        (m, c), = a.num.terms.items()
        return rf_scale(rf_mul(out, _monomial_inverse(m, nz), nz), 1 / c)
    factor, pre = _canonical_factor(a.num, nz)
    out = rf_mul(out, rf_inv(pre, nz), nz)
    if factor is None:
        return out
    den = dict(out.den)
    den[factor] = den.get(factor, 0) + 1
    return RatFunc(out.num, den)


def _canonical_factor(p: Poly, nz):
    """Split ``p = pre * factor`` with ``factor`` monic and free of monomial content.

    Returns ``(factor or None, pre RatFunc)``; ``factor`` is None when ``p`` is a
    single monomial.
    """
    # monomial content over simple bases with integer exponents
    mins: dict | None = None
    for m in p.terms:
        here = {b: e.value for b, e in m if _is_int(e) and not _is_exp(b) and not _is_composite_base(b)}
        if mins is None:
            mins = here
        else:
            for b in list(mins):
                if b in here:
                    mins[b] = min(mins[b], here[b])
                else:
                    mins[b] = min(mins[b], 0)
    content = tuple(sorted(((b, Rational(Fraction(v))) for b, v in (mins or {}).items() if v != 0), key=lambda be: be[0].sort_key))
    q = p
    if content:
        inv = _monomial_inverse(content, nz)
        shifted = poly_mul(p, inv.num, nz)
        if inv.den or shifted.den:
            content, q = (), p
        else:
            q = shifted.num
    lead_m, lead_c = q.leading()
    q = q.scale(1 / lead_c)
    pre = RatFunc(Poly.mono(content, lead_c))
    if q.is_monomial():
        return None, rf_mul(pre, RatFunc(q), nz)
    return q, pre


def rf_pow_int(a: RatFunc, k: int, nz) -> RatFunc:
    if k == 0:
        return RatFunc.one()
    if k < 0:
        a = rf_inv(a, nz)
        k = -k
    out = RatFunc.one()
    base = a
    while k:
        if k & 1:
            out = rf_mul(out, base, nz)
        k >>= 1
        if k:
            base = rf_mul(base, base, nz)
    return out


def _exact_root(c: Fraction, r: Fraction):
    """c ** r as a Fraction when exact, else None (c > 0)."""
    if r.denominator > 64:
        return None
    num, den = c.numerator ** abs(r.numerator), c.denominator ** abs(r.numerator)
    q = r.denominator

    def iroot(n):
        x = round(n ** (1.0 / q)) if n < 2**1000 else None
        if x is None:
            return None
        for cand in (x - 1, x, x + 1):
            if cand >= 0 and cand**q == n:
                return cand
        return None

    a, b = iroot(num), iroot(den)
    if a is None or b is None:
        return None
    out = Fraction(a, b)
    return out if r > 0 else 1 / out


def _split_exponent(e: Expr, nz) -> tuple:
    """Split ``e = k + r`` with integer ``k`` and ``r``'s constant part in ``[0, 1)``."""
    if isinstance(e, Rational):
        k = math.floor(e.value)
        return k, Rational(e.value - k)
    if isinstance(e, Sum):
        for t in e.terms:
            if isinstance(t, Rational):
                k = math.floor(t.value)
                if k == 0:
                    return 0, e
                return k, nz.normalize(add(e, Rational(Fraction(-k))))
    return 0, e


# --------------------------------------------------------------------------
# Polynomial exact division (lex order on an indexed variable list)


def _to_dense(polys: Iterable[Poly]):
    """Map polys to ``{exponent-vector: coef}`` over shared variables, or None."""
    index: dict = {}
    out = []
    for p in polys:
        rows = []
        for m, c in p.terms.items():
            vec = {}
            for b, e in m:
                if _is_int(e) and not _is_composite_base(b):
                    key, deg = b, int(e.value)
                else:
                    key, deg = (b, e), 1
                if key not in index:
                    index[key] = len(index)
                vec[index[key]] = deg
            rows.append((vec, c))
        out.append(rows)
    n = len(index)
    dense = []
    for rows in out:
        d = {}
        for vec, c in rows:
            t = [0] * n
            for i, k in vec.items():
                t[i] = k
            d[tuple(t)] = c
        dense.append(d)
    keys = [None] * n
    for key, i in index.items():
        keys[i] = key
    # order variables by canonical key so lex order is deterministic
    def kkey(key):
        if isinstance(key, tuple):
            return (1, key[0].sort_key, key[1].sort_key)
        return (0, key.sort_key)

    perm = sorted(range(n), key=lambda i: kkey(keys[i]))
    dense = [{tuple(v[i] for i in perm): c for v, c in d.items()} for d in dense]
    keys = [keys[i] for i in perm]
    return dense, keys


def _from_dense(d: dict, keys: list, shift: tuple, laurent: bool = True) -> Poly:
    terms = {}
    for v, c in d.items():
        fac = []
        for i, k in enumerate(v):
            k += shift[i]
            if k == 0:
                continue
            if k < 0 and not laurent:
                return None
            key = keys[i]
            if isinstance(key, tuple):
                if k != 1:
                    return None
                fac.append(key)
            else:
                fac.append((key, Rational(Fraction(k))))
        terms[tuple(sorted(fac, key=lambda be: be[0].sort_key))] = c
    return Poly(terms)


def _div_exact(p: Poly, q: Poly, laurent: bool = True):
    if q.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    if p.is_zero():
        return Poly()
    (P, Q), keys = _to_dense([p, q])
    n = len(keys)
    minp = [min(v[i] for v in P) for i in range(n)]
    minq = [min(v[i] for v in Q) for i in range(n)]
    P = {tuple(a - b for a, b in zip(v, minp)): c for v, c in P.items()}
    Q = {tuple(a - b for a, b in zip(v, minq)): c for v, c in Q.items()}
    lq = max(Q)
    cq = Q[lq]
    quot = {}
    rem = dict(P)
    steps = 0
    while rem:
        steps += 1
        if steps > 20000:
            return None
        lr = max(rem)
        diff = tuple(a - b for a, b in zip(lr, lq))
        if any(d < 0 for d in diff):
            return None
        c = rem[lr] / cq
        quot[diff] = c
        for v, cv in Q.items():
            k = tuple(a + b for a, b in zip(v, diff))
            s = rem.get(k, 0) - c * cv
            if s:
                rem[k] = s
            else:
                rem.pop(k, None)
    shift = tuple(a - b for a, b in zip(minp, minq))
    return _from_dense(quot, keys, shift, laurent)


# --------------------------------------------------------------------------


def _is_positive(e: Expr, positive: frozenset) -> bool:
    if isinstance(e, Rational):
        return e.value > 0
    if isinstance(e, Symbol):
        return e.name in positive
    if isinstance(e, Jet):
        return e.order == 0 and e.root in positive
    if isinstance(e, Func):
        if e.kind == "exp":
            return True
        if e.kind == "sqrt":
            return _is_positive(e.arg, positive)
        return False
    if isinstance(e, Power):
        if _is_positive(e.base, positive):
            return True
        if _is_int(e.exponent):
            return False
        return True  # a real non-integer power presupposes a positive base
    if isinstance(e, Product):
        return all(_is_positive(f, positive) for f in e.factors)
    if isinstance(e, Sum):
        return all(_is_positive(t, positive) for t in e.terms)
    return False


class Normalizer:
    """Normal-form engine for one positivity context (names assumed > 0)."""

    def __init__(self, positive: frozenset = frozenset()):
        self.positive = frozenset(positive)
        self._nf: dict = {}
        self._norm: dict = {}

    def is_positive(self, e: Expr) -> bool:
        return _is_positive(e, self.positive)

    # -- public ------------------------------------------------------------
    def normalize(self, e: Expr) -> Expr:
        hit = self._norm.get(e)
        if hit is not None:
            return hit
        if isinstance(e, (Rational, Symbol, Jet, FuncDeriv)):
            return e
        out = to_expr(self.reduce(self.nf(e)))
        self._norm[e] = out
        self._norm[out] = out
        if len(self._norm) > 400_000:
            self._norm.clear()
            self._nf.clear()
        return out

    def reduce(self, a: RatFunc) -> RatFunc:
        """Cancel denominator factors that divide the numerator exactly."""
        if not a.den or a.num.is_zero():
            return RatFunc(a.num) if a.num.is_zero() else a
        num = a.num
        den = {}
        for f, k in sorted(a.den.items(), key=lambda fk: _poly_sort_key(fk[0])):
            while k:
                q = _div_exact(num, f)
                if q is None:
                    break
                num = q
                k -= 1
            if k:
                den[f] = k
        return RatFunc(num, den)

    # -- conversion -------------------------------------------------------
    def nf(self, e: Expr) -> RatFunc:
        hit = self._nf.get(e)
        if hit is not None:
            return hit
        out = self._nf_uncached(e)
        self._nf[e] = out
        return out

    def _nf_uncached(self, e: Expr) -> RatFunc:
        if isinstance(e, Rational):
            return RatFunc.const(e.value)
        if isinstance(e, (Symbol, Jet, FuncDeriv)):
            return RatFunc(Poly.mono(((e, ONE),)))
        if isinstance(e, Sum):
            out = RatFunc.zero()
            for t in e.terms:
                out = rf_add(out, self.nf(t), self)
            return out
        if isinstance(e, Product):
            out = RatFunc.one()
            for f in e.factors:
                out = rf_mul(out, self.nf(f), self)
                if out.is_zero():
                    break
            return out
        if isinstance(e, Power):
            ex = self.normalize(e.exponent)
            return self.power(self.nf(e.base), ex)
        if isinstance(e, Func):
            return self.func(e.kind, e.arg)
        raise TypeError(f"cannot normalize {e!r}")

    # -- powers -------------------------------------------------------------
    def power(self, b: RatFunc, ex: Expr) -> RatFunc:
        if _is_int(ex):
            return rf_pow_int(b, int(ex.value), self)
        if b.is_zero():
            if isinstance(ex, Rational) and ex.value > 0:
                return RatFunc.zero()
            return self._opaque(b, ex)
        k, r = _split_exponent(ex, self)
        out = self._frac_power(b, r)
        if k:
            out = rf_mul(rf_pow_int(b, k, self), out, self)
        return out

    def _opaque(self, b: RatFunc, ex: Expr) -> RatFunc:
        base = to_expr(self.reduce(b))
        return RatFunc(Poly.mono(((base, ex),)))

    def _frac_power(self, b: RatFunc, r: Expr) -> RatFunc:
        if r == ZERO:
            return RatFunc.one()
        if b.den or not b.num.is_monomial():
            return self._opaque(b, r)
        (m, c), = b.num.terms.items()
        if c < 0:
            return self._opaque(b, r)
        for base, e in m:
            if _is_int(e) and e.value % 2 == 0 and not self.is_positive(base) and not _is_exp(base):
                return self._opaque(b, r)
        out = self.atom_power(Rational(c), r) if c != 1 else RatFunc.one()
        for base, e in m:
            if isinstance(e, Rational) and isinstance(r, Rational):
                ne = Rational(e.value * r.value)
            else:
                ne = self.normalize(mul(e, r))
            out = rf_mul(out, self.atom_power(base, ne), self)
        return out

    def atom_power(self, base: Expr, e: Expr) -> RatFunc:
        """``base ** e`` where ``base`` is a normalized atom or opaque base."""
        if e == ZERO:
            return RatFunc.one()
        if _is_exp(base):
            return self.exp_nf(self.normalize(mul(e, base.arg)))
        if isinstance(base, Rational):
            c = base.value
            if _is_int(e):
                return RatFunc.const(c ** int(e.value))
            if c == 1:
                return RatFunc.one()
            if c <= 0:
                return RatFunc(Poly.mono(((base, e),)))
            k, r = _split_exponent(e, self)
            coef = c**k
            if isinstance(r, Rational):
                root = _exact_root(c, r.value)
                if root is not None:
                    return RatFunc.const(coef * root)
            return RatFunc(Poly.mono(((base, r),), coef))
        if _is_composite_base(base):
            if _is_int(e):
                return rf_pow_int(self.nf(base), int(e.value), self)
            k, r = _split_exponent(e, self)
            out = RatFunc(Poly.mono(((base, r),)))
            if k:
                out = rf_mul(rf_pow_int(self.nf(base), k, self), out, self)
            return out
        return RatFunc(Poly.mono(((base, e),)))

    # -- functions ------------------------------------------------------------
    def func(self, kind: str, arg: Expr) -> RatFunc:
        if kind == "sqrt":
            return self.power(self.nf(arg), HALF)
        a = self.normalize(arg)
        if kind == "exp":
            return self.exp_nf(a)
        if kind == "ln":
            return self.ln_nf(a)
        if a == ZERO:
            return RatFunc.const(1 if kind == "cos" else 0)
        return RatFunc(Poly.mono(((Func(kind, a), ONE),)))

    def exp_nf(self, w: Expr) -> RatFunc:
        if w == ZERO:
            return RatFunc.one()
        terms = w.terms if isinstance(w, Sum) else (w,)
        out = RatFunc.one()
        rest = []
        for t in terms:
            factors = t.factors if isinstance(t, Product) else (t,)
            logs = [f for f in factors if isinstance(f, Func) and f.kind == "ln"]
            if len(logs) == 1:
                others = [f for f in factors if f is not logs[0]]
                k = self.normalize(mul(*others)) if others else ONE
                out = rf_mul(out, self.power(self.nf(logs[0].arg), k), self)
            else:
                rest.append(t)
        if rest:
            r = add(*rest) if len(rest) > 1 else rest[0]
            if len(rest) != len(terms):
                r = self.normalize(r)
            if r != ZERO:
                out = rf_mul(out, RatFunc(Poly.mono(((Func("exp", r), ONE),))), self)
        return out

    def ln_nf(self, a: Expr) -> RatFunc:
        if a == ONE:
            return RatFunc.zero()
        na = self.nf(a)
        if not na.den and na.num.is_monomial():
            (m, c), = na.num.terms.items()
            if c > 0:
                unknown = [
                    (b, e)
                    for b, e in m
                    if not (self.is_positive(b) or _is_exp(b) or not _is_int(e))
                ]
                ok = not unknown or (
                    len(unknown) == 1 and _is_int(unknown[0][1]) and unknown[0][1].value % 2 == 1
                )
                if ok:
                    out = RatFunc.zero()
                    if c != 1:
                        out = RatFunc(Poly.mono(((Func("ln", Rational(c)), ONE),)))
                    for b, e in m:
                        if _is_exp(b):
                            term = self.nf(mul(e, b.arg))
                        else:
                            lb = RatFunc(Poly.mono(((Func("ln", b), ONE),)))
                            term = rf_mul(lb, self.nf(e), self)
                        out = rf_add(out, term, self)
                    return out
        return RatFunc(Poly.mono(((Func("ln", a), ONE),)))


def _poly_sort_key(p: Poly) -> tuple:
    return tuple(sorted(_mono_key(m) for m in p.terms))


def _mono_expr(m: Monomial, c: Fraction) -> Expr:
    factors = [b if e == ONE else Power(b, e) for b, e in m]
    if c != 1:
        factors.append(Rational(c))
    return mul(*factors)


def poly_to_expr(p: Poly) -> Expr:
    return add(*(_mono_expr(m, c) for m, c in p.terms.items()))


def to_expr(a: RatFunc) -> Expr:
    num = poly_to_expr(a.num)
    if not a.den or num == ZERO:
        return num
    dens = [Power(poly_to_expr(f), Rational(Fraction(-k))) for f, k in a.den.items()]
    return mul(num, *dens)


_CONTEXTS: dict = {}


def normalizer(positive: Iterable[str] = ()) -> Normalizer:
    key = frozenset(positive)
    nz = _CONTEXTS.get(key)
    if nz is None:
        if len(_CONTEXTS) > 64:
            _CONTEXTS.clear()
        nz = _CONTEXTS[key] = Normalizer(key)
    return nz


def _default() -> Normalizer:
    return normalizer(())


def normalize(e: Expr, positive: Iterable[str] = ()) -> Expr:
    """Canonical form of ``e``.

    ``positive`` names symbols (or the dependent-variable root) assumed
    strictly positive; power and logarithm laws that need positivity are only
    applied to those.
    """
    return normalizer(positive).normalize(e)


def ratfunc(e: Expr, positive: Iterable[str] = ()) -> RatFunc:
    nz = normalizer(positive)
    return nz.reduce(nz.nf(e))


def is_positive(e: Expr, positive: Iterable[str] = ()) -> bool:
    return _is_positive(e, frozenset(positive))


def collect(p: Poly, is_key_atom: Callable[[Expr], bool]) -> dict:
    """Group ``p`` by the part of each monomial built from atoms selected by ``is_key_atom``.

    Returns ``{key monomial: coefficient Poly}``.
    """
    out: dict = {}
    for m, c in p.terms.items():
        key = tuple(be for be in m if is_key_atom(be[0]))
        rest = tuple(be for be in m if not is_key_atom(be[0]))
        bucket = out.get(key)
        if bucket is None:
            out[key] = {rest: c}
        else:
            s = bucket.get(rest, 0) + c
            if s:
                bucket[rest] = s
            else:
                bucket.pop(rest, None)
    return {k: Poly(v) for k, v in out.items() if v}


def monomial_expr(m: Monomial) -> Expr:
    return _mono_expr(m, Fraction(1))
