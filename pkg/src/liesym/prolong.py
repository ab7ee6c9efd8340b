"""Point-symmetry generators, their prolongation, and determining systems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from liesym.calculus import diff, total_derivative
from liesym.expr import ONE, ZERO, Expr, FuncDeriv, Jet, Symbol, add, as_expr, mul, subs
from liesym.models import PdeModel
from liesym.linalg import rank
from liesym.normal import collect, monomial_expr, normalize, poly_to_expr, ratfunc
from liesym.parsing import ParseContext, parse, to_string

U = Jet("u", ())
COORDS = ("t", "x", "y")
UNKNOWN_NAMES = ("tau", "xi", "eta", "phi")


def _j(*d) -> Jet:
    return Jet("u", tuple(d))


@dataclass(frozen=True)
class VectorField:
    """``tau d/dt + xi d/dx + eta d/dy + phi d/du``."""

    tau: Expr = ZERO
    xi: Expr = ZERO
    eta: Expr = ZERO
    phi: Expr = ZERO

    @classmethod
    def parse(cls, tau="0", xi="0", eta="0", phi="0", ctx: ParseContext | None = None) -> "VectorField":
        return cls(*(parse(s, ctx) if isinstance(s, str) else as_expr(s) for s in (tau, xi, eta, phi)))

    @property
    def components(self) -> tuple:
        return (self.tau, self.xi, self.eta, self.phi)

    def coefficient(self, var: str) -> Expr:
        return self.components[("t", "x", "y", "u").index(var)]

    def map(self, f) -> "VectorField":
        return VectorField(*(f(c) for c in self.components))

    def normalized(self, positive: Iterable[str] = ()) -> "VectorField":
        return self.map(lambda c: normalize(c, positive))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(*(normalize(add(a, b)) for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + other.scale(-1)

    def scale(self, c) -> "VectorField":
        c = as_expr(c)
        return self.map(lambda e: normalize(mul(c, e)))

    def is_zero(self) -> bool:
        return all(normalize(c) == ZERO for c in self.components)

    def apply(self, f: Expr, positive: Iterable[str] = ()) -> Expr:
        """Act as a derivation on a function of (t, x, y, u)."""
        parts = [mul(c, diff(f, U if v == "u" else Symbol(v), positive)) for v, c in zip(("t", "x", "y", "u"), self.components)]
        return normalize(add(*parts), positive)

    def __str__(self):
        out = []
        for v, c in zip(("t", "x", "y", "u"), self.components):
            c = normalize(c)
            if c == ZERO:
                continue
            s = to_string(c)
            if c == ONE:
                out.append(f"d{v}")
            else:
                out.append(f"({s})*d{v}")
        return " + ".join(out) if out else "0"

    def to_dict(self) -> dict:
        return {k: to_string(normalize(c)) for k, c in zip(("tau", "xi", "eta", "phi"), self.components)}


def unknown_field(args: tuple = ("x", "y", "t", "u"), tau_fixed: bool = True, xi_eta_args: tuple | None = None) -> VectorField:
    """Generator with unknown-function components (tau = 1 when fixed)."""
    xa = xi_eta_args or args
    tau = ONE if tau_fixed else FuncDeriv("tau", args)
    return VectorField(tau, FuncDeriv("xi", xa), FuncDeriv("eta", xa), FuncDeriv("phi", args))


def characteristic(v: VectorField) -> Expr:
    """``Q = phi - tau u_t - xi u_x - eta u_y``."""
    return add(v.phi, mul(-1, v.tau, _j("t")), mul(-1, v.xi, _j("x")), mul(-1, v.eta, _j("y")))


def prolong_coefficient(v: VectorField, derivs: tuple, positive: Iterable[str] = ()) -> Expr:
    """``phi^J = D_J Q + tau u_{J,t} + xi u_{J,x} + eta u_{J,y}``."""
    q = characteristic(v)
    for d in derivs:
        q = total_derivative(q, d, positive, normal=False)
    base = Jet("u", tuple(derivs))
    return normalize(
        add(q, mul(v.tau, base.extend("t")), mul(v.xi, base.extend("x")), mul(v.eta, base.extend("y"))),
        positive,
    )


SECOND_ORDER = (("t",), ("x",), ("y",), ("x", "x"), ("x", "y"), ("y", "y"))


def prolong(v: VectorField, positive: Iterable[str] = ()) -> dict:
    """Extended coefficients keyed by derivative tuple: t, x, y, xx, xy, yy."""
    return {d: prolong_coefficient(v, d, positive) for d in SECOND_ORDER}


def invariance_expression(m: PdeModel, v: VectorField) -> Expr:
    """``pr^(2) v`` applied to ``u_t - rhs``, before restricting to solutions."""
    pos = m.positive
    delta = m.equation()
    parts = []
    for var, c in zip(("t", "x", "y", "u"), v.components):
        if c != ZERO:
            parts.append(mul(c, diff(delta, U if var == "u" else Symbol(var), pos, normal=False)))
    for j in sorted((a for a in delta.free_atoms if isinstance(a, Jet) and a.derivs), key=lambda a: a.sort_key):
        dj = diff(delta, j, pos, normal=False)
        if dj != ZERO:
            parts.append(mul(prolong_coefficient(v, j.derivs, pos), dj))
    return normalize(add(*parts), pos)


class OnShellError(ValueError):
    pass


def on_shell_rules(m: PdeModel) -> dict:
    pos = m.positive
    r = m.rhs()
    rx = total_derivative(r, "x", pos)
    ry = total_derivative(r, "y", pos)
    first = {_j("t"): r, _j("t", "x"): rx, _j("t", "y"): ry}
    rules = dict(first)
    try:
        rt = total_derivative(r, "t", pos)
        rules[_j("t", "t")] = normalize(subs(rt, first), pos)
    except ValueError:
        pass
    return rules


def on_shell(e: Expr, m: PdeModel) -> Expr:
    """Eliminate t-derivatives of u using the equation itself."""
    rules = on_shell_rules(m)
    present = {a for a in e.free_atoms if isinstance(a, Jet) and "t" in a.derivs}
    if not present:
        return e
    out = normalize(subs(e, {k: v for k, v in rules.items() if k in present}), m.positive)
    left = [a for a in out.free_atoms if isinstance(a, Jet) and "t" in a.derivs]
    if left:
        raise OnShellError(f"t-derivatives left after substitution: {', '.join(map(to_string, left))}")
    return out


@dataclass
class DeterminingSystem:
    equations: list  # Exprs that must vanish identically
    labels: list  # the jet monomial each equation multiplies
    unknowns: tuple  # names of unknown functions (or coefficient symbols)
    model: PdeModel | None = None

    def __len__(self):
        return len(self.equations)

    def is_linear(self) -> bool:
        """No product of two unknown atoms survives in any equation."""
        for e in self.equations:
            p = ratfunc(e).num
            for m in p.terms:
                deg = sum(
                    int(ex.value) if hasattr(ex, "value") else 99
                    for b, ex in m
                    if _is_unknown(b, self.unknowns)
                )
                if deg > 1:
                    return False
        return True


def _is_unknown(a: Expr, names) -> bool:
    return (isinstance(a, FuncDeriv) and a.name in names) or (isinstance(a, Symbol) and a.name in names)


def is_derivative_jet(a: Expr) -> bool:
    return isinstance(a, Jet) and bool(a.derivs)


def split_by_jets(e: Expr, positive: Iterable[str] = ()) -> tuple:
    """Coefficients of jet monomials in the numerator of ``e``.

    Returns ``(labels, equations)``.  Denominators depending on jets are
    rejected because clearing them would mix monomials.
    """
    rf = ratfunc(e, positive)
    for f in rf.den:
        if any(is_derivative_jet(b) for b in f.atoms()):
            raise ValueError("denominator depends on derivatives of u")
    groups = collect(rf.num, is_derivative_jet)
    keys = sorted(groups, key=lambda k: tuple((b.sort_key, x.sort_key) for b, x in k))
    return [monomial_expr(k) for k in keys], [poly_to_expr(groups[k]) for k in keys]


def determining_system(
    m: PdeModel,
    unknown_style: str = "symbolic-functions",
    *,
    tau_fixed: bool = True,
    xi_eta_args: tuple | None = None,
    ansatz=None,
) -> DeterminingSystem:
    """Collect the on-shell invariance condition by jet monomials.

    ``symbolic-functions`` keeps tau, xi, eta, phi as unknown functions with
    formal derivatives; ``ansatz`` substitutes a polynomial ansatz (see
    :mod:`liesym.ansatz`) and yields equations in its coefficient symbols.
    """
    if unknown_style == "ansatz":
        from liesym.ansatz import Ansatz, ansatz_system

        return ansatz_system(m, ansatz or Ansatz())
    if unknown_style != "symbolic-functions":
        raise ValueError(f"unknown style {unknown_style!r}")
    v = unknown_field(tau_fixed=tau_fixed, xi_eta_args=xi_eta_args)
    e = on_shell(invariance_expression(m, v), m)
    labels, eqs = split_by_jets(e, m.positive)
    names = UNKNOWN_NAMES[1:] if tau_fixed else UNKNOWN_NAMES
    return DeterminingSystem(eqs, labels, names, m)


def _linear_rows(eqs: Sequence[Expr], is_unknown, cols: dict) -> list:
    rows = []
    for e in eqs:
        groups = collect(ratfunc(e).num, is_unknown)
        row = {}
        for key, coef in groups.items():
            if len(key) != 1 or key[0][1] != ONE:
                raise ValueError(f"equation is not linear in the unknowns: {e}")
            row[cols.setdefault(key[0][0], len(cols))] = coef
        rows.append(row)
    return rows


def equivalent_systems(eqs1: Sequence[Expr], eqs2: Sequence[Expr], unknowns: Iterable[str]) -> bool:
    """Whether two linear systems in the unknown functions have the same row
    space over the field of rational functions in everything else.

    Each equation of one system is then a combination of the other's, and
    vice versa.
    """
    names = set(unknowns)
    cols: dict = {}
    is_unk = lambda a: isinstance(a, FuncDeriv) and a.name in names
    r1 = _linear_rows(eqs1, is_unk, cols)
    r2 = _linear_rows(eqs2, is_unk, cols)
    n = len(cols)
    a, b, ab = rank(r1, n), rank(r2, n), rank(r1 + r2, n)
    return a == b == ab
