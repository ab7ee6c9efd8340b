"""Text grammar for expressions: a recursive-descent parser and a printer.

Grammar (``^`` is right-associative and binds tighter than unary minus)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-'? power
    power  := atom ('^' factor)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'
    NUMBER := INT ('/' INT)?

Jet names attach a suffix to the dependent variable: ``u_x``, ``u_2x``,
``u_xy``, ``u_t2x``; a digit repeats the letter after it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from liesym.expr import (
    FUNC_KINDS,
    MAX_JET_ORDER,
    ONE,
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
    neg,
    power,
)


class ParseError(ValueError):
    """Structured parse failure.  ``kind`` is one of ``syntax``,
    ``unknown-identifier``, ``jet-suffix``."""

    def __init__(self, message: str, line: int, column: int, kind: str = "syntax"):
        self.message = message
        self.line = line
        self.column = column
        self.kind = kind
        super().__init__(f"{kind} error at line {line}, column {column}: {message}")


@dataclass(frozen=True)
class ParseContext:
    independents: tuple = ("t", "x", "y")
    dependent: str = "u"
    params: frozenset = field(default_factory=frozenset)
    positive: frozenset = field(default_factory=frozenset)
    # treat undeclared names as free parameters instead of failing
    lenient: bool = False

    def __post_init__(self):
        object.__setattr__(self, "params", frozenset(self.params))
        object.__setattr__(self, "positive", frozenset(self.positive))
        object.__setattr__(self, "independents", tuple(self.independents))
        names = [set(self.independents), {self.dependent}, set(self.params)]
        for i in range(3):
            for j in range(i + 1, 3):
                if names[i] & names[j]:
                    raise ValueError(f"name declared twice: {sorted(names[i] & names[j])}")
        clash = set(FUNC_KINDS) & (set(self.params) | set(self.independents) | {self.dependent})
        if clash:
            raise ValueError(f"function names cannot be variables: {sorted(clash)}")

    def with_params(self, *names: str) -> "ParseContext":
        return ParseContext(self.independents, self.dependent, self.params | set(names), self.positive, self.lenient)


DEFAULT_CONTEXT = ParseContext(lenient=True)

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<num>\d+(?:/\d+)?)|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list:
    toks = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            line, col = _linecol(text, i)
            raise ParseError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), i))
        i = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


def _linecol(text: str, pos: int) -> tuple:
    line = text.count("\n", 0, pos) + 1
    start = text.rfind("\n", 0, pos) + 1
    return line, pos - start + 1


def parse_jet_suffix(suffix: str, independents) -> tuple | None:
    """``'t2x'`` -> ``('t', 'x', 'x')``; None if malformed."""
    out = []
    i = 0
    while i < len(suffix):
        j = i
        while j < len(suffix) and suffix[j].isdigit():
            j += 1
        rep = int(suffix[i:j]) if j > i else 1
        if j >= len(suffix) or suffix[j] not in independents or rep < 1:
            return None
        out.extend(suffix[j] * rep)
        i = j + 1
    return tuple(out) if out else None


class _Parser:
    def __init__(self, text: str, ctx: ParseContext):
        self.text = text
        self.ctx = ctx
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, msg: str, tok: _Tok | None = None, kind: str = "syntax"):
        tok = tok or self.peek()
        line, col = _linecol(self.text, tok.pos)
        raise ParseError(msg, line, col, kind)

    def take(self, text: str) -> bool:
        t = self.peek()
        if t.kind == "op" and t.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.take(text):
            t = self.peek()
            self.fail(f"expected {text!r}, found {t.text or 'end of input'!r}")

    def parse(self) -> Expr:
        if self.peek().kind == "end":
            self.fail("empty expression")
        e = self.expr()
        if self.peek().kind != "end":
            self.fail(f"unexpected {self.peek().text!r}")
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while True:
            if self.take("+"):
                terms.append(self.term())
            elif self.take("-"):
                terms.append(neg(self.term()))
            else:
                return add(*terms)

    def term(self) -> Expr:
        factors = [self.factor()]
        while True:
            if self.take("*"):
                factors.append(self.factor())
            elif self.take("/"):
                tok = self.peek()
                d = self.factor()
                if d == Rational(0):
                    self.fail("division by zero", tok)
                factors.append(power(d, Rational(-1)))
            else:
                return mul(*factors)

    def factor(self) -> Expr:
        if self.take("-"):
            return neg(self.power())
        return self.power()

    def power(self) -> Expr:
        tok = self.peek()
        base = self.atom()
        if self.take("^"):
            ex = self.factor()
            if base == Rational(0) and isinstance(ex, Rational) and ex.value <= 0:
                self.fail("zero raised to a non-positive power", tok)
            return power(base, ex)
        return base

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "num":
            self.i += 1
            p, _, q = t.text.partition("/")
            if q and int(q) == 0:
                self.fail("zero denominator", t)
            return Rational(Fraction(int(p), int(q) if q else 1))
        if t.kind == "name":
            self.i += 1
            if self.peek().kind == "op" and self.peek().text == "(":
                if t.text not in FUNC_KINDS:
                    self.fail(f"unknown function {t.text!r}", t, "unknown-identifier")
                self.i += 1
                arg = self.expr()
                self.expect(")")
                return Func(t.text, arg)
            return self.name(t)
        if self.take("("):
            e = self.expr()
            self.expect(")")
            return e
        self.fail(f"unexpected {t.text or 'end of input'!r}", t)

    def name(self, t: _Tok) -> Expr:
        ctx = self.ctx
        s = t.text
        if s in FUNC_KINDS:
            self.fail(f"function {s!r} needs an argument", t)
        if s in ctx.independents or s in ctx.params:
            return Symbol(s)
        if s == ctx.dependent:
            return Jet(s, ())
        root, sep, suffix = s.partition("_")
        if sep:
            if root == ctx.dependent:
                derivs = parse_jet_suffix(suffix, ctx.independents)
                if derivs is None:
                    self.fail(f"malformed jet suffix in {s!r}", t, "jet-suffix")
                if len(derivs) > MAX_JET_ORDER:
                    self.fail(f"jet order above {MAX_JET_ORDER} in {s!r}", t, "jet-suffix")
                return Jet(root, derivs)
            if root in ctx.independents or root in ctx.params:
                self.fail(f"jet suffix on non-dependent name {root!r}", t, "jet-suffix")
        if ctx.lenient:
            return Symbol(s)
        self.fail(f"unknown identifier {s!r}", t, "unknown-identifier")


def parse(text: str, ctx: ParseContext | None = None, normal: bool = True) -> Expr:
    """Parse ``text``; the result is normalized unless ``normal`` is false."""
    ctx = ctx or DEFAULT_CONTEXT
    try:
        e = _Parser(text, ctx).parse()
    except RecursionError:
        raise ParseError("expression nested too deeply", 1, 1) from None
    if normal:
        from liesym.normal import normalize

        e = normalize(e, ctx.positive)
    return e


# --------------------------------------------------------------------------
# printing

_PREC_SUM, _PREC_PROD, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def jet_name(j: Jet) -> str:
    if not j.derivs:
        return j.root
    parts = []
    for v in sorted(set(j.derivs)):
        n = j.derivs.count(v)
        parts.append(v if n == 1 else f"{n}{v}")
    return f"{j.root}_{''.join(parts)}"


def _split_coeff(e: Expr) -> tuple:
    """``e = c * rest`` with rational ``c``."""
    if isinstance(e, Rational):
        return e.value, ONE
    if isinstance(e, Product):
        c = Fraction(1)
        rest = []
        for f in e.factors:
            if isinstance(f, Rational):
                c *= f.value
            else:
                rest.append(f)
        return c, mul(*rest)
    return Fraction(1), e


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _is_neg_power(f: Expr) -> bool:
    return (
        isinstance(f, Power)
        and isinstance(f.exponent, Rational)
        and f.exponent.value < 0
    )


def _pr(e: Expr) -> tuple:
    """Return ``(text, precedence)``."""
    if isinstance(e, Rational):
        v = e.value
        if v < 0:
            return "-" + _frac(-v), _PREC_NEG
        return _frac(v), (_PREC_ATOM if v.denominator == 1 else _PREC_PROD)
    if isinstance(e, Symbol):
        return e.name, _PREC_ATOM
    if isinstance(e, Jet):
        return jet_name(e), _PREC_ATOM
    if isinstance(e, FuncDeriv):
        return jet_name(Jet(e.name, e.derivs)), _PREC_ATOM
    if isinstance(e, Func):
        return f"{e.kind}({_pr(e.arg)[0]})", _PREC_ATOM
    if isinstance(e, Sum):
        # constants last reads better: x + y + 1
        terms = sorted(e.terms, key=lambda t: isinstance(t, Rational))
        out = ""
        for k, t in enumerate(terms):
            c, rest = _split_coeff(t)
            if c < 0:
                s = _pr_product(-c, rest)
                out += ("-" if k == 0 else " - ") + _wrap(s, _PREC_PROD)
            else:
                s = _pr_product(c, rest)
                out += ("" if k == 0 else " + ") + s[0]
        return out, _PREC_SUM
    if isinstance(e, Product):
        c, rest = _split_coeff(e)
        if c < 0:
            s = _pr_product(-c, rest)
            return "-" + _wrap(s, _PREC_PROD), _PREC_NEG
        return _pr_product(c, rest)
    if isinstance(e, Power):
        b = _pr(e.base)
        base = b[0] if b[1] == _PREC_ATOM else f"({b[0]})"
        x = _pr(e.exponent)
        ex = x[0] if x[1] == _PREC_ATOM else f"({x[0]})"
        return f"{base}^{ex}", _PREC_POW
    raise TypeError(f"cannot print {e!r}")


def _wrap(s: tuple, prec: int) -> str:
    return s[0] if s[1] >= prec else f"({s[0]})"


def _pr_product(c: Fraction, rest: Expr) -> tuple:
    """Print ``c * rest`` for ``c > 0``; negative powers go after a slash."""
    factors = rest.factors if isinstance(rest, Product) else ([] if rest == ONE else [rest])
    num = [f for f in factors if not _is_neg_power(f)]
    den = [power(f.base, Rational(-f.exponent.value)) for f in factors if _is_neg_power(f)]
    parts = []
    if c != 1 or not num:
        if c.denominator != 1:
            # the denominator joins the slash part so "x/2" rather than "1/2*x"
            if c.numerator != 1 or not num:
                parts.append(str(c.numerator))
            den.insert(0, Rational(c.denominator))
        else:
            parts.append(str(c.numerator))
    parts += [_wrap(_pr(f), _PREC_PROD + 1) for f in num]
    text = "*".join(parts)
    if den:
        for f in den:
            d = _wrap(_pr(f), _PREC_POW)
            # "2/3" would lex as one rational literal
            if text[-1:].isdigit() and d[:1].isdigit():
                d = f"({d})"
            text += "/" + d
    if len(parts) + len(den) == 1 and not den:
        return text, _pr(num[0])[1] if num else _PREC_ATOM
    return text, _PREC_PROD


def to_string(e: Expr) -> str:
    return _pr(e)[0]
