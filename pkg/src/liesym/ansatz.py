"""Polynomial-ansatz solution of the determining equations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from liesym.expr import ONE, ZERO, Expr, Jet, Power, Rational, Symbol, add, mul, power
from liesym.linalg import nullspace, rank
from liesym.models import PdeModel
from liesym.normal import Poly, collect, normalize, poly_to_expr, ratfunc
from liesym.prolong import (
    DeterminingSystem,
    VectorField,
    invariance_expression,
    on_shell,
)
from liesym.zerotest import is_zero

COMPONENTS = ("tau", "xi", "eta", "phi")
U = Jet("u", ())


class AnsatzError(ValueError):
    pass


@dataclass(frozen=True)
class Ansatz:
    """Polynomial infinitesimals of joint degree ``degree`` in (x, y, t).

    ``tau`` is ``"fixed"`` (tau is a constant; the reported basis is the part
    complementing d/dt, matching tau = 1), ``"free"`` (tau gets the same
    polynomial ansatz) or ``"zero"``.
    """

    degree: int = 1
    u_degree: int = 1
    tau: str = "fixed"

    def __post_init__(self):
        if self.degree < 0:
            raise AnsatzError("empty ansatz: degree must be >= 0")
        if self.u_degree < 0:
            raise AnsatzError("empty ansatz: u-degree must be >= 0")
        if self.tau not in ("fixed", "free", "zero"):
            raise AnsatzError(f"tau mode {self.tau!r}")

    def monomials(self) -> list:
        out = []
        for tot in range(self.degree + 1):
            for a in range(tot, -1, -1):
                for b in range(tot - a, -1, -1):
                    c = tot - a - b
                    for e in range(self.u_degree + 1):
                        out.append(mul(power(Symbol("x"), a), power(Symbol("y"), b), power(Symbol("t"), c), power(U, e)))
        return out

    def unknowns(self) -> list:
        """``(component, monomial, coefficient Symbol)`` triples."""
        mons = self.monomials()
        out = []
        for comp in COMPONENTS:
            if comp == "tau":
                if self.tau == "zero":
                    continue
                if self.tau == "fixed":
                    out.append((comp, ONE, Symbol("tau#0")))
                    continue
            for i, m in enumerate(mons):
                out.append((comp, m, Symbol(f"{comp}#{i}")))
        return out

    def field(self) -> tuple:
        unk = self.unknowns()
        comps = {c: [] for c in COMPONENTS}
        for comp, m, s in unk:
            comps[comp].append(mul(s, m))
        return VectorField(*(add(*comps[c]) for c in COMPONENTS)), unk


def _is_coordinate(a: Expr, params, unknown_names) -> bool:
    if isinstance(a, Symbol):
        return a.name not in params and a.name not in unknown_names
    return True


def ansatz_system(m: PdeModel, a: Ansatz) -> DeterminingSystem:
    v, unk = a.field()
    names = {s.name for _, _, s in unk}
    e = on_shell(invariance_expression(m, v), m)
    rf = ratfunc(e, m.positive)
    params = set(m.params)
    groups = collect(rf.num, lambda b: _is_coordinate(b, params, names))
    keys = sorted(groups, key=lambda k: tuple((b.sort_key, x.sort_key) for b, x in k))
    from liesym.normal import monomial_expr

    return DeterminingSystem(
        [poly_to_expr(groups[k]) for k in keys],
        [monomial_expr(k) for k in keys],
        tuple(sorted(names)),
        m,
    )


def _linear_rows(system: DeterminingSystem, unknowns: list) -> list:
    index = {s: i for i, (_, _, s) in enumerate(unknowns)}
    rows = []
    for eq in system.equations:
        p = ratfunc(eq).num
        row: dict = {}
        for mono, c in p.terms.items():
            hit = [(b, x) for b, x in mono if b in index]
            if len(hit) != 1 or hit[0][1] != ONE:
                raise AnsatzError("determining equations are not linear in the ansatz coefficients")
            col = index[hit[0][0]]
            rest = tuple(bx for bx in mono if bx[0] not in index)
            row[col] = row.get(col, Poly()) + Poly.mono(rest, c)
            if row[col].is_zero():
                del row[col]
        if row:
            rows.append(row)
    return rows


@dataclass
class SymmetryBasis:
    generators: list  # VectorFields
    params: tuple = ()
    conditions: list = field(default_factory=list)  # parameter polynomials assumed nonzero
    time_translation: bool = False  # whether a tau = 1 generator exists
    model: str = ""

    def __len__(self):
        return len(self.generators)


def _vec_to_field(vec: list, unknowns: list) -> VectorField:
    comps = {c: [] for c in COMPONENTS}
    for coef, (comp, mono, _) in zip(vec, unknowns):
        if not coef.is_zero():
            comps[comp].append(mul(poly_to_expr(coef), mono))
    return VectorField(*(normalize(add(*comps[c])) for c in COMPONENTS))


def solve_symmetries(m: PdeModel, a: Ansatz | None = None, verify: bool = True) -> SymmetryBasis:
    """Basis of polynomial point symmetries of ``m`` within the ansatz."""
    a = a or Ansatz()
    system = ansatz_system(m, a)
    unknowns = a.unknowns()
    rows = _linear_rows(system, unknowns)
    n = len(unknowns)
    basis, conds = nullspace(rows, n)
    time_translation = False
    if a.tau == "fixed":
        # keep the subspace with zero tau; note whether tau = 1 is reachable
        ti = next(i for i, (c, _, _) in enumerate(unknowns) if c == "tau")
        with_tau = [v for v in basis if not v[ti].is_zero()]
        time_translation = bool(with_tau)
        if with_tau:
            piv = with_tau[0]
            reduced = []
            for v in basis:
                if v is piv:
                    continue
                if v[ti].is_zero():
                    reduced.append(v)
                else:
                    # v * piv[ti] - piv * v[ti] has zero tau component
                    reduced.append([x * piv[ti] - y * v[ti] for x, y in zip(v, piv)])
            basis = reduced
    gens = [_vec_to_field(v, unknowns) for v in basis]
    if verify:
        for g in gens:
            res = on_shell(invariance_expression(m, g), m)
            if not is_zero(res, m.positive).zero:
                raise AssertionError(f"generator fails invariance: {g}")
    return SymmetryBasis(gens, tuple(m.params), conds, time_translation, m.name)


def _coordinates(fields: list, params) -> tuple:
    """Rows of field coordinates over a shared (component, monomial) basis."""
    params = set(params)
    cols: dict = {}
    rows = []
    for f in fields:
        row: dict = {}
        for k, comp in enumerate(f.components):
            p = ratfunc(comp).num
            if ratfunc(comp).den:
                raise ValueError("generator components must be polynomial in the coordinates")
            for key, coef in collect(p, lambda b: not (isinstance(b, Symbol) and b.name in params)).items():
                col = cols.setdefault((k, key), len(cols))
                row[col] = coef
        rows.append(row)
    return rows, len(cols)


def span_equal(b1, b2, params=()) -> bool:
    """Whether two generator lists span the same space over Q(params)."""
    g1 = b1.generators if isinstance(b1, SymmetryBasis) else list(b1)
    g2 = b2.generators if isinstance(b2, SymmetryBasis) else list(b2)
    params = tuple(params) or (b1.params if isinstance(b1, SymmetryBasis) else ())
    rows, n = _coordinates(g1 + g2, params)
    r1 = rank(rows[: len(g1)], n)
    r2 = rank(rows[len(g1) :], n)
    r12 = rank(rows, n)
    return r1 == r2 == r12


def span_contains(big, small, params=()) -> bool:
    gb = big.generators if isinstance(big, SymmetryBasis) else list(big)
    gs = small.generators if isinstance(small, SymmetryBasis) else list(small)
    rows, n = _coordinates(gb + gs, params)
    return rank(rows[: len(gb)], n) == rank(rows, n)
