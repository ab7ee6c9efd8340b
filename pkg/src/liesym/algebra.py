"""Lie algebras of vector fields: brackets, structure constants, adjoint action."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from liesym.expr import ZERO, Expr, Rational, Symbol, add, cos, exp, mul, power, sin
from liesym.linalg import nullspace
from liesym.normal import normalize, poly_to_expr
from liesym.prolong import VectorField


class NotClosedError(ValueError):
    def __init__(self, i: int, j: int, residual: VectorField):
        self.i, self.j, self.residual = i, j, residual
        super().__init__(f"[V{i + 1},V{j + 1}] = {residual} leaves the span of the basis")


def commutator(v: VectorField, w: VectorField, positive=()) -> VectorField:
    """``[v, w] = v w - w v``: coefficient k is ``v(w^k) - w(v^k)``."""
    comps = []
    for a, b in zip(v.components, w.components):
        comps.append(normalize(add(v.apply(b, positive), mul(-1, w.apply(a, positive))), positive))
    return VectorField(*comps)


def _coords_in_basis(target: VectorField, basis: Sequence[VectorField], params=()) -> list | None:
    """Exact coordinates of ``target`` in ``basis`` (Fractions or Exprs), or None."""
    from liesym.ansatz import _coordinates

    rows, ncols = _coordinates(list(basis) + [target], params)
    n = len(basis)
    # one equation per coordinate column: sum_i c_i B[i][col] - w[col] = 0
    eqs = []
    for col in range(ncols):
        eq = {}
        for i in range(n):
            if col in rows[i]:
                eq[i] = rows[i][col]
        if col in rows[n]:
            eq[n] = rows[n][col].scale(-1)
        if eq:
            eqs.append(eq)
    basis_vecs, _ = nullspace(eqs, n + 1)
    sol = [v for v in basis_vecs if not v[n].is_zero()]
    if not sol:
        return None
    v = sol[0]
    # the remaining null vectors must not touch the last column; the basis is independent
    last = v[n]
    out = []
    for i in range(n):
        if last.is_const():
            q = v[i].scale(1 / last.const_value())
            out.append(q.const_value() if q.is_const() else poly_to_expr(q))
        else:
            out.append(normalize(mul(poly_to_expr(v[i]), power(poly_to_expr(last), Rational(-1)))))
    return out


@dataclass
class LieAlgebra:
    basis: list  # VectorFields
    c: list  # c[i][j][k]: Fraction coefficient of V_k in [V_i, V_j]
    names: tuple = ()

    @property
    def dim(self) -> int:
        return len(self.basis)

    def ad(self, i: int) -> list:
        """Matrix of ad V_i: column j holds the coordinates of [V_i, V_j]."""
        n = self.dim
        return [[self.c[i][j][k] for j in range(n)] for k in range(n)]

    def ad_of(self, a: Sequence) -> np.ndarray:
        """ad of ``sum a_i V_i`` as a float matrix."""
        n = self.dim
        out = np.zeros((n, n))
        for i in range(n):
            if a[i]:
                out += float(a[i]) * np.array(self.ad(i), dtype=float)
        return out

    def bracket(self, a: Sequence, b: Sequence) -> np.ndarray:
        return self.ad_of(a) @ np.asarray(b, dtype=float)

    def table(self) -> list:
        """Cells ``[V_i, V_j]`` as ``{k: Fraction}`` sparse dicts."""
        n = self.dim
        return [[{k: self.c[i][j][k] for k in range(n) if self.c[i][j][k]} for j in range(n)] for i in range(n)]

    def is_antisymmetric(self) -> bool:
        n = self.dim
        return all(self.c[i][j][k] == -self.c[j][i][k] for i in range(n) for j in range(n) for k in range(n))

    def jacobi_defect(self) -> list:
        """Triples (i, j, k) where the Jacobi identity fails (exact)."""
        n = self.dim
        bad = []
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    tot = [Fraction(0)] * n
                    for (p, q, r) in ((i, j, k), (j, k, i), (k, i, j)):
                        # [V_p, [V_q, V_r]]
                        inner = self.c[q][r]
                        for m in range(n):
                            if inner[m]:
                                for s in range(n):
                                    tot[s] += inner[m] * self.c[p][m][s]
                    if any(tot):
                        bad.append((i, j, k))
        return bad

    def format_cell(self, i: int, j: int) -> str:
        return format_combination(self.c[i][j], self.names)

    def format_table(self) -> str:
        n = self.dim
        names = self.names or tuple(f"V{i + 1}" for i in range(n))
        cells = [[self.format_cell(i, j) for j in range(n)] for i in range(n)]
        w = max(6, max(len(c) for row in cells for c in row) + 2)
        out = ["[,]".ljust(w) + "".join(nm.ljust(w) for nm in names)]
        for i in range(n):
            out.append(names[i].ljust(w) + "".join(c.ljust(w) for c in cells[i]))
        return "\n".join(out)


def format_combination(coeffs: Sequence, names: Sequence = ()) -> str:
    parts = []
    for k, v in enumerate(coeffs):
        if not v:
            continue
        nm = names[k] if names else f"V{k + 1}"
        v = Fraction(v)
        mag = abs(v)
        if mag == 1:
            s = nm
        elif mag.denominator == 1:
            s = f"{mag.numerator}*{nm}"
        elif mag.numerator == 1:
            s = f"{nm}/{mag.denominator}"
        else:
            s = f"{mag.numerator}*{nm}/{mag.denominator}"
        parts.append(("-" if v < 0 else "+", s))
    if not parts:
        return "0"
    text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, s in parts[1:]:
        text += f" {sign} {s}"
    return text


def structure_table(basis: Sequence[VectorField], names: Sequence[str] = (), params=(), positive=()) -> LieAlgebra:
    """Structure constants of ``basis``; raises :class:`NotClosedError`."""
    n = len(basis)
    c = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            w = commutator(basis[i], basis[j], positive)
            if w.is_zero():
                continue
            coords = _coords_in_basis(w, basis, params)
            if coords is None:
                raise NotClosedError(i, j, w)
            for k, val in enumerate(coords):
                if isinstance(val, Expr):
                    raise ValueError("structure constants depend on parameters")
                c[i][j][k] = Fraction(val)
                c[j][i][k] = -Fraction(val)
    names = tuple(names) or tuple(f"V{i + 1}" for i in range(n))
    return LieAlgebra(list(basis), c, names)


# --------------------------------------------------------------------------
# exact linear algebra on small Fraction matrices


def _fmat_mul(a, b):
    n, m, p = len(a), len(b), len(b[0])
    return [[sum((a[i][k] * b[k][j] for k in range(m)), Fraction(0)) for j in range(p)] for i in range(n)]


def _fmat_id(n):
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def _fmat_inv(a):
    n = len(a)
    m = [list(row) + _fmat_id(n)[i] for i, row in enumerate(a)]
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            raise ZeroDivisionError("singular matrix")
        m[c], m[p] = m[p], m[c]
        piv = m[c][c]
        m[c] = [x / piv for x in m[c]]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [row[n:] for row in m]


def charpoly(a) -> list:
    """Coefficients ``[1, c1, ..., cn]`` of det(sI - A) (Faddeev-LeVerrier)."""
    n = len(a)
    coeffs = [Fraction(1)]
    mk = _fmat_id(n)
    for k in range(1, n + 1):
        am = _fmat_mul(a, mk)
        ck = -sum(am[i][i] for i in range(n)) / k
        coeffs.append(ck)
        mk = [[am[i][j] + (ck if i == j else 0) for j in range(n)] for i in range(n)]
    return coeffs


def _poly_eval(p, x):
    acc = Fraction(0)
    for c in p:
        acc = acc * x + c
    return acc


def _poly_divide_root(p, r):
    out = [p[0]]
    for c in p[1:-1]:
        out.append(c + out[-1] * r)
    return out


def _divisors(n: int) -> list:
    n = abs(n)
    small = [d for d in range(1, int(math.isqrt(n)) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def _exact_sqrt(q: Fraction):
    if q < 0:
        return None
    a, b = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if a * a == q.numerator and b * b == q.denominator:
        return Fraction(a, b)
    return None


def exact_roots(p) -> list | None:
    """Roots of a rational polynomial as ``(re, im, multiplicity)`` with
    rational parts, or None when some root is not of that form."""
    p = [Fraction(c) for c in p]
    roots: dict = {}

    def push(key):
        roots[key] = roots.get(key, 0) + 1

    while len(p) > 1 and p[-1] == 0:
        push((Fraction(0), Fraction(0)))
        p = p[:-1]
    while len(p) > 3:
        lcm = 1
        for c in p:
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
        ints = [int(c * lcm) for c in p]
        found = None
        for q in _divisors(ints[0]):
            for s in _divisors(ints[-1]):
                for cand in (Fraction(s, q), Fraction(-s, q)):
                    if _poly_eval(p, cand) == 0:
                        found = cand
                        break
                if found is not None:
                    break
            if found is not None:
                break
        if found is None:
            return None
        push((found, Fraction(0)))
        p = _poly_divide_root(p, found)
    if len(p) == 3:
        a, b, c = p
        disc = b * b - 4 * a * c
        s = _exact_sqrt(abs(disc))
        if s is None:
            return None
        if disc >= 0:
            push(((-b + s) / (2 * a), Fraction(0)))
            push(((-b - s) / (2 * a), Fraction(0)))
        else:
            push((-b / (2 * a), s / (2 * a)))
            push((-b / (2 * a), -s / (2 * a)))
    elif len(p) == 2:
        push((-p[1] / p[0], Fraction(0)))
    return [(re, im, m) for (re, im), m in roots.items()]


def _cpow(z, k):
    out = (Fraction(1), Fraction(0))
    for _ in range(k):
        out = (out[0] * z[0] - out[1] * z[1], out[0] * z[1] + out[1] * z[0])
    return out


@dataclass(frozen=True)
class _Term:
    kind: str  # "exp", "cos", "sin": s^k e^{a s} (cos|sin)(b s)
    k: int
    a: Fraction
    b: Fraction
    coef: tuple  # Fraction matrix

    def deriv0(self, j: int) -> Fraction:
        if j < self.k:
            return Fraction(0)
        base = Fraction(math.comb(j, self.k) * math.factorial(self.k))
        z = _cpow((self.a, self.b), j - self.k)
        if self.kind == "exp":
            return base * z[0]
        if self.kind == "cos":
            return base * z[0]
        return base * z[1]

    def value(self, s: float) -> float:
        v = s**self.k * math.exp(float(self.a) * s)
        if self.kind == "cos":
            v *= math.cos(float(self.b) * s)
        elif self.kind == "sin":
            v *= math.sin(float(self.b) * s)
        return v

    def expr(self, s: Expr) -> Expr:
        parts = [power(s, self.k)] if self.k else []
        if self.a:
            parts.append(exp(mul(Rational(self.a), s)))
        if self.kind == "cos":
            parts.append(cos(mul(Rational(self.b), s)))
        elif self.kind == "sin":
            parts.append(sin(mul(Rational(self.b), s)))
        return mul(*parts)


@dataclass
class ClosedForm:
    """``exp(s M) = sum f(s) C_f`` over exponential-polynomial basis functions."""

    terms: list
    n: int

    def matrix(self, s: float) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for t in self.terms:
            out += t.value(s) * np.array(t.coef, dtype=float)
        return out

    def expr_matrix(self, s: Expr) -> list:
        out = [[[] for _ in range(self.n)] for _ in range(self.n)]
        for t in self.terms:
            f = t.expr(s)
            for i in range(self.n):
                for j in range(self.n):
                    if t.coef[i][j]:
                        out[i][j].append(mul(Rational(t.coef[i][j]), f))
        return [[normalize(add(*cell)) if cell else ZERO for cell in row] for row in out]


def closed_form_exp(m) -> ClosedForm | None:
    """Closed form of ``exp(s M)`` for a rational matrix, or None."""
    n = len(m)
    roots = exact_roots(charpoly(m))
    if roots is None:
        return None
    funcs = []
    for re, im, mult in roots:
        if im < 0:
            continue
        for k in range(mult):
            if im == 0:
                funcs.append(("exp", k, re, Fraction(0)))
            else:
                funcs.append(("cos", k, re, im))
                funcs.append(("sin", k, re, im))
    if len(funcs) != n:
        return None
    protos = [_Term(kind, k, a, b, ()) for kind, k, a, b in funcs]
    w = [[t.deriv0(j) for t in protos] for j in range(n)]
    winv = _fmat_inv(w)
    powers = [_fmat_id(n)]
    for _ in range(n - 1):
        powers.append(_fmat_mul(m, powers[-1]))
    terms = []
    for f, t in enumerate(protos):
        coef = [[sum((winv[f][j] * powers[j][r][c] for j in range(n)), Fraction(0)) for c in range(n)] for r in range(n)]
        if any(x for row in coef for x in row):
            terms.append(_Term(t.kind, t.k, t.a, t.b, tuple(tuple(row) for row in coef)))
    return ClosedForm(terms, n)


def series_exp(m: np.ndarray, s: float, tol: float = 1e-15, max_terms: int = 200) -> np.ndarray:
    """Truncated Taylor series of exp(s M); the definition of the adjoint action."""
    m = np.asarray(m, dtype=float) * s
    norm = np.abs(m).sum(axis=0).max() if m.size else 0.0
    squarings = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0.5 else 0
    m = m / (2**squarings)
    out = np.eye(len(m))
    term = np.eye(len(m))
    for k in range(1, max_terms):
        term = term @ m / k
        out = out + term
        if np.abs(term).max() <= tol * max(1.0, np.abs(out).max()):
            break
    for _ in range(squarings):
        out = out @ out
    return out


@dataclass
class AdjointMap:
    """``Ad(exp(eps V_i))`` acting on coefficient vectors (columns are images of V_j)."""

    index: int
    eps: float
    matrix: np.ndarray
    closed: bool = False

    def apply(self, a) -> np.ndarray:
        return self.matrix @ np.asarray(a, dtype=float)

    def compose(self, other: "AdjointMap") -> np.ndarray:
        return self.matrix @ other.matrix


_closed_cache: dict = {}


def adjoint_closed_form(alg: LieAlgebra, i: int) -> ClosedForm | None:
    key = (id(alg), i)
    if key not in _closed_cache:
        minus_ad = [[-x for x in row] for row in alg.ad(i)]
        _closed_cache[key] = closed_form_exp(minus_ad)
    return _closed_cache[key]


def adjoint(alg: LieAlgebra, i: int, eps, method: str = "auto") -> AdjointMap:
    """Matrix of ``Ad(exp(eps V_i)) = exp(-eps ad V_i)``.

    ``method`` is ``closed`` (exact eigenstructure), ``numeric`` (scipy's
    scaling-and-squaring exponential), ``series`` (truncated Taylor series) or
    ``auto`` (closed form when available).
    """
    e = float(eps)
    minus_ad = -np.array(alg.ad(i), dtype=float)
    if method in ("auto", "closed"):
        cf = adjoint_closed_form(alg, i)
        if cf is not None:
            return AdjointMap(i, e, cf.matrix(e), True)
        if method == "closed":
            raise ValueError("no closed form: eigenvalues are not rational or Gaussian rational")
    if method == "series":
        return AdjointMap(i, e, series_exp(minus_ad, e))
    return AdjointMap(i, e, scipy.linalg.expm(e * minus_ad))


def adjoint_symbolic(alg: LieAlgebra, i: int, eps: Expr | str = "eps") -> list:
    """Closed-form matrix entries as expressions in ``eps``."""
    s = Symbol(eps) if isinstance(eps, str) else eps
    cf = adjoint_closed_form(alg, i)
    if cf is None:
        raise ValueError("no closed form available")
    return cf.expr_matrix(s)
