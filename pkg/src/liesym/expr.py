"""Immutable expression trees.

Every node is a frozen dataclass.  The smart constructors :func:`add`,
:func:`mul` and :func:`power` keep the cheap structural invariants (flat,
sorted, at most one rational constant, no ``^0``/``^1``); full expansion and
cancellation is the job of :func:`liesym.normal.normalize`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Union

FUNC_KINDS = ("exp", "ln", "sqrt", "sin", "cos", "tanh", "arctan")
INDEPENDENT = ("t", "x", "y")
MAX_JET_ORDER = 3

Number = Union[int, Fraction]


class Expr:
    """Base class for all expression nodes."""

    __slots__ = ()

    # arithmetic sugar; results are lightly simplified, not normalized
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), MINUS_ONE))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, MINUS_ONE))

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    def __str__(self):
        from liesym.parsing import to_string

        return to_string(self)

    def _fields(self) -> tuple:
        raise NotImplementedError

    # structural equality with a cached hash; trees are deep and hashed often
    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        return hash(self) == hash(other) and self._fields() == other._fields()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        d = self.__dict__
        h = d.get("_hash")
        if h is None:
            h = d["_hash"] = hash((type(self).__name__,) + self._fields())
        return h

    @property
    def sort_key(self) -> tuple:
        raise NotImplementedError

    def children(self) -> tuple:
        return ()

    def walk(self) -> Iterator["Expr"]:
        yield self
        for c in self.children():
            yield from c.walk()

    @cached_property
    def free_atoms(self) -> frozenset:
        out = set()
        for node in self.walk():
            if isinstance(node, (Symbol, Jet, FuncDeriv)):
                out.add(node)
        return frozenset(out)

    def has(self, atom: "Expr") -> bool:
        return atom in self.free_atoms


@dataclass(frozen=True, eq=False)
class Rational(Expr):
    value: Fraction

    def _fields(self):
        return (self.value,)

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    @property
    def sort_key(self):
        return (0, self.value)

    def is_integer(self) -> bool:
        return self.value.denominator == 1

    def __repr__(self):
        return f"Rational({self.value})"


@dataclass(frozen=True, eq=False)
class Symbol(Expr):
    name: str

    def _fields(self):
        return (self.name,)

    @property
    def sort_key(self):
        return (1, self.name)

    def __repr__(self):
        return f"Symbol({self.name!r})"


@dataclass(frozen=True, eq=False)
class Jet(Expr):
    """A derivative of a dependent variable, e.g. ``u_xy`` is ``Jet('u', ('x', 'y'))``."""

    root: str
    derivs: tuple = ()

    def _fields(self):
        return (self.root, self.derivs)

    def __post_init__(self):
        object.__setattr__(self, "derivs", tuple(sorted(self.derivs)))

    @property
    def order(self) -> int:
        return len(self.derivs)

    def extend(self, var: str) -> "Jet":
        return Jet(self.root, self.derivs + (var,))

    @property
    def sort_key(self):
        return (2, self.root, len(self.derivs), self.derivs)

    def __repr__(self):
        return f"Jet({self.root!r}, {self.derivs!r})"


@dataclass(frozen=True, eq=False)
class FuncDeriv(Expr):
    """Opaque unknown function of ``args`` with a formal derivative multi-index.

    ``args`` names the arguments; the dependent variable appears by its root
    name (``'u'``) and is the order-0 :class:`Jet` of that root.
    """

    name: str
    args: tuple
    derivs: tuple = ()

    def _fields(self):
        return (self.name, self.args, self.derivs)

    def __post_init__(self):
        object.__setattr__(self, "derivs", tuple(sorted(self.derivs)))

    @property
    def sort_key(self):
        return (3, self.name, len(self.derivs), self.derivs)

    def extend(self, var: str) -> "FuncDeriv":
        return FuncDeriv(self.name, self.args, self.derivs + (var,))

    def __repr__(self):
        return f"FuncDeriv({self.name!r}, {self.derivs!r})"


@dataclass(frozen=True, eq=False)
class Sum(Expr):
    terms: tuple

    def _fields(self):
        return (self.terms,)

    @cached_property
    def sort_key(self):
        return (4, 2, tuple(t.sort_key for t in self.terms))

    def children(self):
        return self.terms


@dataclass(frozen=True, eq=False)
class Product(Expr):
    factors: tuple

    def _fields(self):
        return (self.factors,)

    @cached_property
    def sort_key(self):
        return (4, 1, tuple(f.sort_key for f in self.factors))

    def children(self):
        return self.factors


@dataclass(frozen=True, eq=False)
class Power(Expr):
    base: Expr
    exponent: Expr

    def _fields(self):
        return (self.base, self.exponent)

    @cached_property
    def sort_key(self):
        return (4, 0, self.base.sort_key, self.exponent.sort_key)

    def children(self):
        return (self.base, self.exponent)


@dataclass(frozen=True, eq=False)
class Func(Expr):
    kind: str
    arg: Expr

    def _fields(self):
        return (self.kind, self.arg)

    def __post_init__(self):
        if self.kind not in FUNC_KINDS:
            raise ValueError(f"unknown function kind {self.kind!r}")

    @cached_property
    def sort_key(self):
        return (4, 3, self.kind, self.arg.sort_key)

    def children(self):
        return (self.arg,)


ZERO = Rational(Fraction(0))
ONE = Rational(Fraction(1))
MINUS_ONE = Rational(Fraction(-1))
HALF = Rational(Fraction(1, 2))


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Rational(Fraction(value))
    if isinstance(value, str):
        return Symbol(value)
    raise TypeError(f"cannot convert {value!r} to Expr")


def const(value: Number) -> Rational:
    return Rational(Fraction(value))


def symbols(names: str) -> tuple:
    return tuple(Symbol(n) for n in names.replace(",", " ").split())


def jet(spec: str = "", root: str = "u") -> Jet:
    """``jet('xy')`` is u_xy; ``jet('')`` is u itself."""
    return Jet(root, tuple(spec))


def is_const(e: Expr) -> bool:
    return isinstance(e, Rational)


def _sorted(items: Iterable[Expr]) -> tuple:
    return tuple(sorted(items, key=lambda e: e.sort_key))


def add(*args: Expr) -> Expr:
    flat: list = []
    c = Fraction(0)
    for a in args:
        a = as_expr(a)
        if isinstance(a, Sum):
            parts = a.terms
        else:
            parts = (a,)
        for p in parts:
            if isinstance(p, Rational):
                c += p.value
            else:
                flat.append(p)
    if c != 0:
        flat.append(Rational(c))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(_sorted(flat))


def mul(*args: Expr) -> Expr:
    flat: list = []
    c = Fraction(1)
    for a in args:
        a = as_expr(a)
        parts = a.factors if isinstance(a, Product) else (a,)
        for p in parts:
            if isinstance(p, Rational):
                c *= p.value
            else:
                flat.append(p)
    if c == 0:
        return ZERO
    if c != 1:
        flat.append(Rational(c))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return Product(_sorted(flat))


def power(base: Expr, exponent: Expr) -> Expr:
    base, exponent = as_expr(base), as_expr(exponent)
    if isinstance(exponent, Rational):
        if exponent.value == 0:
            return ONE
        if exponent.value == 1:
            return base
        if isinstance(base, Rational) and exponent.is_integer():
            if base.value == 0 and exponent.value < 0:
                raise ZeroDivisionError("0 raised to a negative power")
            return Rational(base.value ** int(exponent.value))
    if isinstance(base, Rational) and base.value == 1:
        return ONE
    if isinstance(base, Power) and isinstance(exponent, Rational) and exponent.is_integer():
        inner = base.exponent
        if isinstance(inner, Rational) and inner.is_integer():
            # (b^n)^m = b^(n m) for integers
            return power(base.base, Rational(inner.value * exponent.value))
    return Power(base, exponent)


def neg(e: Expr) -> Expr:
    return mul(MINUS_ONE, e)


def func(kind: str, arg) -> Func:
    return Func(kind, as_expr(arg))


def exp(a) -> Expr:
    return func("exp", a)


def ln(a) -> Expr:
    return func("ln", a)


def sqrt(a) -> Expr:
    return func("sqrt", a)


def sin(a) -> Expr:
    return func("sin", a)


def cos(a) -> Expr:
    return func("cos", a)


def tanh(a) -> Expr:
    return func("tanh", a)


def arctan(a) -> Expr:
    return func("arctan", a)


def rebuild(e: Expr, children: tuple) -> Expr:
    """Rebuild a composite node from new children with the smart constructors."""
    if isinstance(e, Sum):
        return add(*children)
    if isinstance(e, Product):
        return mul(*children)
    if isinstance(e, Power):
        return power(children[0], children[1])
    if isinstance(e, Func):
        return Func(e.kind, children[0])
    return e


def subs(e: Expr, mapping: dict) -> Expr:
    """Structural substitution of atoms (Symbols, Jets, FuncDerivs). Not normalized."""
    if not mapping:
        return e
    cache: dict = {}

    def go(node: Expr) -> Expr:
        hit = mapping.get(node)
        if hit is not None:
            return hit
        if isinstance(node, (Rational, Symbol, Jet, FuncDeriv)):
            return node
        got = cache.get(node)
        if got is not None:
            return got
        out = rebuild(node, tuple(go(c) for c in node.children()))
        cache[node] = out
        return out

    return go(e)


def jets_in(e: Expr, root: str | None = None) -> set:
    return {a for a in e.free_atoms if isinstance(a, Jet) and (root is None or a.root == root)}


def max_jet_order(e: Expr) -> int:
    return max((a.order for a in e.free_atoms if isinstance(a, Jet)), default=0)
