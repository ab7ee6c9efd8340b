"""Exact linear algebra over polynomials in free parameters.

Matrices are lists of sparse rows ``{column: Poly}``.  Elimination is
Gauss-Jordan; constant pivots divide exactly, nonconstant pivots use
fraction-free cross multiplication and are reported as branch conditions
(the generic answer assumes they do not vanish).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from liesym.normal import Poly, poly_to_expr


@dataclass
class Echelon:
    rows: list  # sparse rows in reduced form
    pivots: list  # pivot column of each row
    conditions: list = field(default_factory=list)  # nonconstant pivots assumed nonzero

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def condition_exprs(self) -> list:
        """Distinct nonconstant pivots, made monic."""
        out = []
        for p in self.conditions:
            q = p.scale(1 / p.leading()[1])
            if q not in out:
                out.append(q)
        return [poly_to_expr(q) for q in out]


def _row_mul(row: dict, p: Poly) -> dict:
    return {c: v * p for c, v in row.items()}


def _row_scale(row: dict, c: Fraction) -> dict:
    return {k: v.scale(c) for k, v in row.items()}


def _axpy(row: dict, a: Poly, other: dict) -> dict:
    """row - a * other."""
    out = dict(row)
    for c, v in other.items():
        t = v * a
        s = out.get(c)
        s = t.scale(-1) if s is None else s - t
        if s.is_zero():
            out.pop(c, None)
        else:
            out[c] = s
    return out


def _primitive(row: dict, divisors: list) -> dict:
    if not row:
        return row
    g, l = 0, 1
    for v in row.values():
        for q in v.terms.values():
            g = math.gcd(g, q.numerator)
            l = l * q.denominator // math.gcd(l, q.denominator)
    if g:
        row = _row_scale(row, Fraction(l, g))
    # strip pivot factors shared by every entry
    for d in divisors:
        while row:
            qs = {}
            for c, v in row.items():
                q = v.div_exact(d)
                if q is None:
                    break
                qs[c] = q
            else:
                row = qs
                continue
            break
    return row


def echelon(matrix: list, ncols: int | None = None) -> Echelon:
    rows = [dict(r) for r in matrix if r]
    if ncols is None:
        ncols = 1 + max((c for r in rows for c in r), default=-1)
    pivots: list = []
    conds: list = []
    r = 0
    for c in range(ncols):
        cands = [i for i in range(r, len(rows)) if c in rows[i]]
        if not cands:
            continue
        best = min(cands, key=lambda i: (not rows[i][c].is_const(), len(rows[i][c]), len(rows[i])))
        rows[r], rows[best] = rows[best], rows[r]
        p = rows[r][c]
        if p.is_const():
            rows[r] = _row_scale(rows[r], 1 / p.const_value())
            pr = rows[r]
            for i in range(len(rows)):
                if i != r and c in rows[i]:
                    rows[i] = _axpy(rows[i], rows[i][c], pr)
        else:
            conds.append(p)
            pr = rows[r]
            for i in range(len(rows)):
                if i != r and c in rows[i]:
                    a = rows[i][c]
                    rows[i] = _primitive(_axpy(_row_mul(rows[i], p), a, pr), conds)
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return Echelon(rows[:r], pivots, conds)


def rank(matrix: list, ncols: int | None = None) -> int:
    return echelon(matrix, ncols).rank


def nullspace(matrix: list, ncols: int) -> tuple:
    """Basis of the right nullspace as dense Poly vectors, plus branch conditions."""
    ech = echelon(matrix, ncols)
    piv = set(ech.pivots)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        involved = [(i, row) for i, row in enumerate(ech.rows) if f in row]
        lcm = Poly.const(1)
        seen = []
        for _, row in involved:
            p = row[ech.pivots[_]]
            if not p.is_const() and p not in seen:
                seen.append(p)
                lcm = lcm * p
        vec = {f: lcm}
        for i, row in involved:
            p = row[ech.pivots[i]]
            if p.is_const():
                q = (row[f] * lcm).scale(-1 / p.const_value())
            else:
                q = (row[f] * lcm).div_exact(p)
                if q is None:  # pragma: no cover - lcm is a multiple of p
                    raise ArithmeticError("inexact back-substitution")
                q = q.scale(-1)
            vec[ech.pivots[i]] = q
        vec = _primitive(vec, ech.conditions)
        basis.append([vec.get(c, Poly()) for c in range(ncols)])
    return basis, ech.condition_exprs()
