"""Invariants of a generator, similarity reduction, and residual certificates."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from liesym.calculus import diff
from liesym.evaluate import compile_expr, run
from liesym.expr import (
    HALF,
    ONE,
    ZERO,
    Expr,
    Jet,
    Power,
    Rational,
    Symbol,
    add,
    arctan,
    as_expr,
    exp,
    ln,
    mul,
    power,
    sqrt,
    subs,
)
from liesym.models import PdeModel
from liesym.normal import collect, normalize, poly_to_expr, ratfunc
from liesym.parsing import ParseContext, parse, to_string
from liesym.prolong import VectorField, characteristic
from liesym.zerotest import Indeterminate, is_zero

T, X, Y, Z = (Symbol(s) for s in ("t", "x", "y", "z"))
U = Jet("u", ())
H = Jet("h", ())
REDUCED_CONTEXT = ParseContext(independents=("t", "z"), dependent="h")


class Unsupported:
    """Explicit outcome of :func:`invariants_of` for unrecognized generators."""

    def __init__(self, reason: str):
        self.reason = reason

    def __bool__(self):
        return False

    def __repr__(self):
        return f"Unsupported({self.reason!r})"


class NotReducible(ValueError):
    pass


class DomainExhausted(ArithmeticError):
    pass


@dataclass
class InvariantSet:
    """Invariants ``(I1, I2, I3)``; ``z = I2`` and ``u = shape * h(t, z) + shift``."""

    generator: VectorField
    invariants: tuple
    shape: Expr = ONE
    shift: Expr = ZERO
    positive: frozenset = frozenset()

    @property
    def z(self) -> Expr:
        return self.invariants[1]

    def u_of(self, h: Expr) -> Expr:
        """``u(x, y, t)`` for ``h`` an expression in the Symbols t and z."""
        return normalize(add(mul(self.shape, subs(h, {Z: self.z})), self.shift), self.positive)

    def to_dict(self) -> dict:
        return {
            "invariants": [to_string(i) for i in self.invariants],
            "z": to_string(self.z),
            "u": to_string(add(mul(self.shape, Symbol("h")), self.shift)),
        }


# --------------------------------------------------------------------------
# invariants


def _free_of(e: Expr, names: Iterable[str]) -> bool:
    names = set(names)
    return not any((isinstance(a, Symbol) and a.name in names) or (isinstance(a, Jet) and a.root in names) for a in e.free_atoms)


def _nonzero(e: Expr) -> bool:
    return normalize(e) != ZERO


def _affine_part(v: VectorField):
    """``(M, b)`` with ``(xi, eta) = M (x, y) + b``, or None when not affine
    with coefficients free of x, y, u."""
    comps = (v.xi, v.eta)
    m = [[normalize(diff(c, s)) for s in (X, Y)] for c in comps]
    for row in m:
        for e in row:
            if not _free_of(e, ("x", "y", "u")):
                return None
    b = [normalize(subs(c, {X: ZERO, Y: ZERO})) for c in comps]
    if not all(_free_of(e, ("u",)) for e in b):
        return None
    return m, b


def _axis_data(m_ii: Expr, b_i: Expr, coord: Expr):
    """Per-axis flow: ``dX/ds = m X + b``.  Returns (kind, shifted coordinate, rate)."""
    if _nonzero(m_ii):
        return "scale", normalize(add(coord, mul(b_i, power(m_ii, Rational(-1))))), m_ii
    if _nonzero(b_i):
        return "shift", coord, b_i
    return "still", coord, ZERO


def _diagonal_invariants(m, b):
    """z and a flow time s (with v(s) = 1) for ``x' = m1 x + b1, y' = m2 y + b2``."""
    ax = _axis_data(m[0][0], b[0], X)
    ay = _axis_data(m[1][1], b[1], Y)
    kinds = (ax[0], ay[0])
    if "still" in kinds:
        z = ax[1] if ax[0] == "still" else ay[1]
        other = ay if ax[0] == "still" else ax
    elif kinds == ("shift", "shift"):
        z = normalize(add(mul(ax[2], Y), mul(-1, ay[2], X)))
        other = ax
    elif kinds == ("scale", "scale"):
        # Y X^(-m2/m1)
        z = normalize(mul(ay[1], power(ax[1], mul(-1, ay[2], power(ax[2], Rational(-1))))))
        other = ay
    else:
        sc, sh = (ax, ay) if ax[0] == "scale" else (ay, ax)
        z = normalize(mul(sc[1], exp(mul(-1, sc[2], sh[1], power(sh[2], Rational(-1))))))
        other = sc
    # prefer a scaling axis for the flow time, the y axis first
    for a in (ay, ax):
        if a[0] == "scale":
            return z, ("scale", a[1], a[2])
    if other[0] == "shift":
        return z, ("shift", other[1], other[2])
    return z, None


def _flow_time_factor(kind_data, lam: Expr) -> Expr:
    """``exp(-lam s)`` written without exp when the flow time is a logarithm."""
    kind, coord, rate = kind_data
    if kind == "scale":
        return power(coord, mul(-1, lam, power(rate, Rational(-1))))
    if kind == "shift":
        return exp(mul(-1, lam, coord, power(rate, Rational(-1))))
    # "angle": coord is the angle theta with d(theta)/ds = rate
    return exp(mul(-1, lam, coord, power(rate, Rational(-1))))


def _planar_linear(m, b):
    """Rotation-scaling drift ``M = [[a, w], [-w, a]]`` with w != 0."""
    a, w = m[0][0], m[0][1]
    if normalize(add(m[1][1], mul(-1, a))) != ZERO or normalize(add(m[1][0], w)) != ZERO or not _nonzero(w):
        return None
    # fixed point: M X0 = -b, det = a^2 + w^2
    det = normalize(add(mul(a, a), mul(w, w)))
    inv = power(det, Rational(-1))
    x0 = normalize(mul(inv, add(mul(-1, a, b[0]), mul(w, b[1]))))
    y0 = normalize(mul(inv, add(mul(-1, w, b[0]), mul(-1, a, b[1]))))
    p = normalize(add(X, mul(-1, x0)))
    q = normalize(add(Y, mul(-1, y0)))
    r2 = normalize(add(mul(p, p), mul(q, q)))
    theta = arctan(mul(q, power(p, Rational(-1))))  # d(theta)/ds = -w
    if not _nonzero(a):
        return r2, ("angle", theta, normalize(mul(-1, w)))
    # ln r2 - 2 a s with s = -theta / w
    z = normalize(add(mul(w, ln(r2)), mul(2, a, theta)))
    return z, ("scale", r2, normalize(mul(2, a)))


def _real_jordan(m, b):
    """Constant rational M that is neither diagonal nor rotation-scaling:
    change to eigen (or Jordan) coordinates and reuse the diagonal rules."""
    from fractions import Fraction

    try:
        mm = [[Fraction(normalize(e).value) for e in row] for row in m]
    except AttributeError:
        return None
    tr = mm[0][0] + mm[1][1]
    det = mm[0][0] * mm[1][1] - mm[0][1] * mm[1][0]
    disc = tr * tr - 4 * det
    from liesym.algebra import _exact_sqrt

    s = _exact_sqrt(abs(disc))
    if s is None or disc < 0:
        return None
    lams = [(tr + s) / 2, (tr - s) / 2]

    def left_eig(lam):
        # row vector w with w M = lam w
        a, c = mm[0][0] - lam, mm[1][0]
        if a != 0 or c != 0:
            return (c, -a) if (c, -a) != (0, 0) else (mm[1][1] - lam, -mm[0][1])
        return (mm[1][1] - lam, -mm[0][1]) if (mm[1][1] - lam, -mm[0][1]) != (0, 0) else (1, 0)

    if disc == 0:
        return None
    ws = [left_eig(l) for l in lams]
    # W_i = w_i . X satisfies dW_i/ds = lam_i W_i + w_i . b
    coords = [normalize(add(mul(Rational(w[0]), X), mul(Rational(w[1]), Y))) for w in ws]
    bs = [normalize(add(mul(Rational(w[0]), b[0]), mul(Rational(w[1]), b[1]))) for w in ws]
    ax = _axis_data(Rational(lams[0]), bs[0], coords[0])
    ay = _axis_data(Rational(lams[1]), bs[1], coords[1])
    return ax, ay


def invariants_of(v: VectorField, positive: Iterable[str] = ()) -> "InvariantSet | Unsupported":
    """Closed-form invariants for frozen-time affine generators.

    Supported: ``tau = 0``, ``(xi, eta)`` affine in (x, y) and ``phi = lam u``
    (or a constant) with ``lam`` free of the coordinates.
    """
    positive = frozenset(positive)
    v = v.normalized(positive)
    if v.tau != ZERO:
        return Unsupported("tau != 0: only frozen-time generators are integrated")
    aff = _affine_part(v)
    if aff is None:
        return Unsupported("xi, eta are not affine in (x, y)")
    m, b = aff
    lam = normalize(diff(v.phi, U))
    if not _free_of(lam, ("x", "y", "u")):
        return Unsupported("phi is not linear in u with constant rate")
    mu = normalize(subs(v.phi, {U: ZERO}))
    if _nonzero(mu) and _nonzero(lam):
        return Unsupported("phi = lam u + mu with both parts nonzero")
    if not _free_of(mu, ("x", "y", "u")):
        return Unsupported("phi has an inhomogeneous part depending on the coordinates")
    if m[0][1] == ZERO and m[1][0] == ZERO:
        z, ftime = _diagonal_invariants(m, b)
    else:
        pl = _planar_linear(m, b)
        if pl is not None:
            z, ftime = pl
        else:
            jordan = _real_jordan(m, b)
            if jordan is None:
                return Unsupported("drift matrix has no supported eigenstructure")
            ax, ay = jordan
            z, ftime = _diagonal_invariants(
                [[ax[2] if ax[0] == "scale" else ZERO, ZERO], [ZERO, ay[2] if ay[0] == "scale" else ZERO]],
                [ax[2] if ax[0] == "shift" else ZERO, ay[2] if ay[0] == "shift" else ZERO],
            )
            z = normalize(subs(z, {X: ax[1], Y: ay[1]}))
            ftime = (ftime[0], normalize(subs(ftime[1], {X: ax[1], Y: ay[1]})), ftime[2]) if ftime else None
    if _nonzero(lam):
        if ftime is None:
            return Unsupported("no flow time for the u scaling")
        factor = normalize(_flow_time_factor(ftime, lam), positive)
        i3 = normalize(mul(U, factor), positive)
        shape = normalize(power(factor, Rational(-1)), positive)
        shift = ZERO
    elif _nonzero(mu):
        if ftime is None or ftime[0] == "scale":
            s = normalize(mul(ln(ftime[1]), power(ftime[2], Rational(-1)))) if ftime else None
        else:
            s = normalize(mul(ftime[1], power(ftime[2], Rational(-1))))
        if s is None:
            return Unsupported("no flow time for the u shift")
        i3 = normalize(add(U, mul(-1, mu, s)))
        shape, shift = ONE, normalize(mul(mu, s))
    else:
        i3, shape, shift = U, ONE, ZERO
    return InvariantSet(v, (T, z, i3), shape, shift, positive)


def verify_invariants(v: VectorField, cands: Sequence, positive: Iterable[str] = (), seed: int = 0) -> list:
    """``v(I)`` zero-tested for each candidate; returns ZeroResults."""
    out = []
    for c in cands:
        e = parse(c) if isinstance(c, str) else c
        out.append(is_zero(v.apply(e, positive), positive, seed=seed))
    return out


def jacobian_rank(invs: Sequence[Expr], positive: Iterable[str] = (), points: int = 20, seed: int = 0) -> list:
    """Rank of d(I1, I2, I3)/d(t, x, y, u) at sampled points."""
    positive = frozenset(positive)
    wrt = (T, X, Y, U)
    rows = [[normalize(diff(i, w, positive)) for w in wrt] for i in invs]
    atoms = sorted(set().union(*(e.free_atoms for r in rows for e in r)) | {T, X, Y, U}, key=lambda a: a.sort_key)
    progs = [[compile_expr(e, tuple(atoms)) for e in r] for r in rows]
    rng = np.random.default_rng(seed)
    from liesym.zerotest import sample_points

    ranks = []
    tries = 0
    while len(ranks) < points and tries < 50:
        tries += 1
        vals = sample_points(atoms, positive, points, rng)
        jac = np.array([[run(p, vals) for p in r] for r in progs])  # (3, 4, npts)
        for k in range(vals.shape[1]):
            jk = jac[:, :, k]
            if np.all(np.isfinite(jk)) and len(ranks) < points:
                s = np.linalg.svd(jk, compute_uv=False)
                ranks.append(int(np.sum(s > 1e-9 * max(1.0, s[0]))))
    return ranks


# --------------------------------------------------------------------------
# reduction


def _h_jets(e: Expr) -> list:
    return [a for a in e.free_atoms if isinstance(a, Jet) and a.root == "h"]


def _chain(e: Expr, w: Symbol, zexpr: Expr, dz: Expr, positive) -> Expr:
    """Derivative in ``w`` of an expression in (x, y, t) and h-jets at z = I2."""
    parts = [diff(e, w, positive, normal=False)]
    for j in _h_jets(e):
        de = diff(e, j, positive, normal=False)
        if de == ZERO:
            continue
        inner = mul(j.extend("z"), dz)
        if w == T:
            inner = add(inner, j.extend("t"))
        parts.append(mul(de, inner))
    return normalize(add(*parts), positive)


def _solve_section(zexpr: Expr, positive) -> dict | None:
    """Substitution (x, y) -> section(z) with I2 = z, one coordinate held fixed."""
    for w, other in ((Y, X), (X, Y)):
        for c in (ZERO, ONE):
            try:
                found = _section_at(zexpr, w, other, c, positive)
            except (ArithmeticError, ValueError):
                continue
            if found is not None:
                return found
    return None


def _singular(e: Expr) -> bool:
    """A power of zero with a non-numeric exponent survives normalization."""
    return any(isinstance(n, Power) and n.base == ZERO for n in e.walk())


def _section_at(zexpr: Expr, w: Symbol, other: Symbol, c: Expr, positive) -> dict | None:
    zc = normalize(subs(zexpr, {other: c}), positive)
    if _free_of(zc, (w.name,)) or _singular(zc):
        return None
    d1 = normalize(diff(zc, w, positive), positive)
    cands = []
    if _free_of(d1, (w.name,)):
        b0 = normalize(subs(zc, {w: ZERO}), positive)
        cands.append(mul(add(Z, mul(-1, b0)), power(d1, Rational(-1))))
    else:
        # k w^p
        p = normalize(mul(w, d1, power(zc, Rational(-1))), positive)
        if _free_of(p, (w.name,)) and _nonzero(p):
            k = normalize(mul(zc, power(w, mul(-1, p))), positive)
            if _free_of(k, (w.name,)):
                cands.append(power(mul(Z, power(k, Rational(-1))), power(p, Rational(-1))))
        d2 = normalize(diff(d1, w, positive), positive)
        if _free_of(d2, (w.name,)):
            a2 = normalize(mul(HALF, d2))
            b1 = normalize(subs(d1, {w: ZERO}))
            b0 = normalize(subs(zc, {w: ZERO}))
            disc = add(mul(b1, b1), mul(-4, a2, add(b0, mul(-1, Z))))
            cands.append(mul(add(mul(-1, b1), sqrt(disc)), power(mul(2, a2), Rational(-1))))
    for sol in cands:
        sol = normalize(sol, positive)
        chk = normalize(add(subs(zc, {w: sol}), mul(-1, Z)), positive | {"z"})
        try:
            if is_zero(chk, positive | {"z"}).zero:
                return {other: c, w: sol}
        except Indeterminate:
            continue
    return None


def substitute_shape(m: PdeModel, inv: InvariantSet, positive: frozenset) -> Expr:
    """``u_t - rhs`` with ``u = shape * h(t, I2) + shift``, before elimination."""
    zexpr = inv.z
    u = normalize(add(mul(inv.shape, H), inv.shift), positive)
    dz = {w: normalize(diff(zexpr, w, positive), positive) for w in (T, X, Y)}
    d = {}
    d[("t",)] = _chain(u, T, zexpr, dz[T], positive)
    d[("x",)] = _chain(u, X, zexpr, dz[X], positive)
    d[("y",)] = _chain(u, Y, zexpr, dz[Y], positive)
    d[("x", "x")] = _chain(d[("x",)], X, zexpr, dz[X], positive)
    d[("x", "y")] = _chain(d[("x",)], Y, zexpr, dz[Y], positive)
    d[("y", "y")] = _chain(d[("y",)], Y, zexpr, dz[Y], positive)
    rules = {U: u}
    rules.update({Jet("u", k): v for k, v in d.items()})
    return normalize(subs(m.equation(), rules), positive)


def _is_h_jet(a: Expr) -> bool:
    return isinstance(a, Jet) and a.root == "h"


def reduce(m: PdeModel, inv: InvariantSet, positive: Iterable[str] = (), check: bool = True, seed: int = 0) -> Expr:
    """Reduced equation in t, z and h-jets (numerator after clearing
    nonvanishing denominators).  Raises :class:`NotReducible`."""
    pos = frozenset(positive) | m.positive | inv.positive
    if "u" in pos:
        pos = pos | {"h"}
    full = substitute_shape(m, inv, pos)
    section = _solve_section(inv.z, pos)
    if section is None:
        raise NotReducible(f"cannot solve z = {to_string(inv.z)} for x or y")
    zpos = pos | {"z"}
    red = normalize(subs(full, section), zpos)
    rf = ratfunc(red, zpos)
    rf_num = _clear_laurent(rf.num, _is_h_jet)
    reduced = poly_to_expr(rf_num)
    if not _free_of(reduced, ("x", "y", "u")):
        raise NotReducible("x, y survive in the reduced equation")
    if check:
        # the original coefficient ratios must be functions of (t, z) only
        orig = collect(_clear_laurent(ratfunc(full, pos).num, _is_h_jet), _is_h_jet)
        sec = collect(rf_num, _is_h_jet)
        if set(orig) != set(sec):
            raise NotReducible("h-monomials differ between the full and reduced equations")
        keys = sorted(orig, key=lambda k: tuple((b.sort_key, x.sort_key) for b, x in k))
        ref = keys[0]
        c_ref = poly_to_expr(orig[ref])
        s_ref = subs(poly_to_expr(sec[ref]), {Z: inv.z})
        for k in keys[1:]:
            cross = add(mul(poly_to_expr(orig[k]), s_ref), mul(-1, c_ref, subs(poly_to_expr(sec[k]), {Z: inv.z})))
            try:
                res = is_zero(cross, pos, seed=seed)
            except Indeterminate:
                raise NotReducible("no admissible sample for the fibre check") from None
            if not res.zero:
                raise NotReducible(f"genuine x, y dependence in the coefficient of {to_string(poly_to_expr(sec[k].__class__.mono(k)))}")
    return reduced


def _clear_laurent(p, is_atom):
    """Multiply ``p`` by the monomial clearing negative integer exponents of
    the selected atoms."""
    from liesym.normal import Poly

    low: dict = {}
    for mono in p.terms:
        for b, e in mono:
            if is_atom(b) and isinstance(e, Rational) and e.value < 0:
                low[b] = min(low.get(b, 0), e.value)
    if not low:
        return p
    fix = Poly.mono(tuple(sorted(((b, Rational(-k)) for b, k in low.items()), key=lambda bx: bx[0].sort_key)))
    return ratfunc(mul(poly_to_expr(p), poly_to_expr(fix))).num


def proportional(e1: Expr, e2: Expr, positive: Iterable[str] = (), seed: int = 0):
    """Whether two reduced equations agree up to a factor free of h-jets:
    every h-jet derivative of the cross difference ``e1 d e2 - e2 d e1``
    must vanish (the quotient ``e1 / e2`` does not depend on h)."""
    pos = frozenset(positive)
    if normalize(e2, pos) == ZERO or normalize(e1, pos) == ZERO:
        return is_zero(add(e1, mul(-1, e2)), pos, seed=seed)
    jets = sorted(set(_h_jets(e1)) | set(_h_jets(e2)), key=lambda a: a.sort_key)
    result = None
    for j in jets:
        cross = add(mul(e2, diff(e1, j, pos)), mul(-1, e1, diff(e2, j, pos)))
        result = is_zero(cross, pos, seed=seed)
        if not result.zero:
            return result
    return result if result is not None else is_zero(add(e1, mul(-1, e2)), pos, seed=seed)


# --------------------------------------------------------------------------
# residual certificates


@dataclass
class SolutionCandidate:
    u: Expr  # in x, y, t and parameters
    params: dict = field(default_factory=dict)  # name -> bound value (None: sampled)
    positive: frozenset = frozenset()  # atoms sampled positive
    conditions: tuple = ()  # Exprs required to be > 0 at admissible points
    generator: VectorField | None = None
    name: str = ""

    def bind(self, **values) -> "SolutionCandidate":
        p = dict(self.params)
        p.update(values)
        return SolutionCandidate(self.u, p, self.positive, self.conditions, self.generator, self.name)


@dataclass
class ResidualReport:
    name: str
    max_abs: float
    mean_abs: float
    max_scaled: float
    points: int
    certificate: str  # "exact", "sampled" or "failed"
    ok: bool
    surface: float | None = None  # invariant-surface residual when a generator is attached
    witness: dict | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ok": self.ok,
            "certificate": self.certificate,
            "points": self.points,
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "max_scaled": self.max_scaled,
            "surface_residual": self.surface,
            "witness": self.witness,
        }


def _terms(e: Expr) -> list:
    from liesym.expr import Sum

    return list(e.children()) if isinstance(e, Sum) else [e]


def _sampled_residual(
    terms: list,
    atoms: list,
    positive: frozenset,
    fixed: dict,
    conditions: Sequence[Expr],
    grid: int,
    seed: int,
    lo: float = 0.25,
    hi: float = 4.0,
):
    """Sum of ``terms`` at ``grid`` admissible random points.

    Returns (abs residuals, scaled residuals, sample matrix)."""
    free = [a for a in atoms if a not in fixed]
    names = tuple(atoms)
    progs = [compile_expr(t, names) for t in terms]
    cprogs = [compile_expr(c, names) for c in conditions]
    rng = np.random.default_rng(seed)
    got_abs, got_scaled, got_pts = [], [], []
    tries = 0
    while len(got_abs) < grid:
        tries += 1
        if tries > 40:
            raise DomainExhausted(f"only {len(got_abs)} admissible points after {tries - 1} batches")
        n = 2 * grid
        vals = np.empty((len(names), n))
        for i, a in enumerate(names):
            if a in fixed:
                vals[i] = fixed[a]
                continue
            mag = rng.uniform(lo, hi, n)
            pos = (isinstance(a, Symbol) and a.name in positive) or (isinstance(a, Jet) and a.root in positive)
            vals[i] = mag if pos else mag * rng.choice((-1.0, 1.0), n)
        with np.errstate(all="ignore"):
            tv = np.array([run(p, vals) for p in progs]) if progs else np.zeros((1, n))
            ok = np.all(np.isfinite(tv), axis=0)
            for cp in cprogs:
                cv = run(cp, vals)
                ok &= np.isfinite(cv) & (cv > 0)
        total = tv.sum(axis=0)
        scale = np.maximum(np.abs(tv).sum(axis=0), 1.0)
        for j in np.nonzero(ok)[0]:
            if len(got_abs) == grid:
                break
            got_abs.append(abs(total[j]))
            got_scaled.append(abs(total[j]) / scale[j])
            got_pts.append(vals[:, j])
    return np.array(got_abs), np.array(got_scaled), np.array(got_pts), names


def _atoms_of(es: Iterable[Expr]) -> list:
    return sorted(set().union(*(e.free_atoms for e in es)), key=lambda a: a.sort_key)


def _residual_report(name, raw, positive, fixed, conditions, grid, seed, tol) -> ResidualReport:
    """Exact normal form first; the unsimplified residual is sampled in every case."""
    exact = normalize(raw, positive) == ZERO
    terms = _terms(raw)
    atoms = _atoms_of(terms + list(conditions))
    fixed = {a: v for a, v in fixed.items() if a in atoms}
    ab, sc, pts, names = _sampled_residual(terms, atoms, positive, fixed, conditions, grid, seed)
    worst = int(np.argmax(sc)) if len(sc) else 0
    ok = exact or bool(sc.max() <= tol)
    witness = None if ok else {to_string(a): float(pts[worst][i]) for i, a in enumerate(names)}
    cert = "exact" if exact else ("sampled" if ok else "failed")
    return ResidualReport(name, float(ab.max()), float(ab.mean()), float(sc.max()), len(ab), cert, ok, witness=witness)


def _fixed_values(params: dict) -> dict:
    return {Symbol(k): float(v) for k, v in params.items() if v is not None}


def pde_residual(m: PdeModel, u: Expr, positive: Iterable[str] = (), normal: bool = True) -> Expr:
    """``u_t - rhs`` with the jets of ``u`` substituted."""
    pos = frozenset(positive) | {a for a in m.positive if a != "u"}
    rules = {U: u}
    for d in (("t",), ("x",), ("y",), ("x", "x"), ("x", "y"), ("y", "y")):
        e = u
        for s in d:
            e = diff(e, Symbol(s), pos)
        rules[Jet("u", d)] = e
    out = subs(m.equation(), rules)
    return normalize(out, pos) if normal else out


def verify_solution(m: PdeModel, s: SolutionCandidate, grid: int = 200, seed: int = 0, tol: float = 1e-10) -> ResidualReport:
    """Residual of the model at ``grid`` admissible points (exact when the
    residual normalizes to zero)."""
    pos = frozenset(s.positive)
    conds = list(s.conditions)
    if "u" in m.positive:
        conds.append(s.u)
    u = normalize(subs(s.u, {Symbol(k): as_expr(v) for k, v in s.params.items() if isinstance(v, int) or _is_fraction(v)}), pos)
    res = pde_residual(m, u, pos, normal=False)
    rep = _residual_report(s.name, res, pos, _fixed_values(s.params), conds, grid, seed, tol)
    if s.generator is not None:
        q = invariant_surface_residual(s.generator, u, pos)
        srep = _residual_report(s.name, q, pos, _fixed_values(s.params), conds, grid, seed, tol)
        rep.surface = srep.max_scaled
    return rep


def _is_fraction(v) -> bool:
    from fractions import Fraction

    return isinstance(v, Fraction)


def invariant_surface_residual(v: VectorField, u: Expr, positive=()) -> Expr:
    """``phi - tau u_t - xi u_x - eta u_y`` evaluated on ``u``."""
    rules = {U: u}
    for d in ("t", "x", "y"):
        rules[Jet("u", (d,))] = diff(u, Symbol(d), positive)
    return subs(characteristic(v), rules)


def reduced_residual(r: Expr, h: Expr, positive: Iterable[str] = ()) -> Expr:
    pos = frozenset(positive)
    rules = {}
    for j in _h_jets(r):
        e = h
        for d in j.derivs:
            e = diff(e, Symbol(d), pos)
        rules[j] = e
    return subs(r, rules)


def verify_reduced_solution(
    r: Expr,
    h: Expr,
    params: dict | None = None,
    positive: Iterable[str] = (),
    conditions: Sequence[Expr] = (),
    grid: int = 200,
    seed: int = 0,
    tol: float = 1e-10,
    name: str = "",
) -> ResidualReport:
    pos = frozenset(positive)
    res = reduced_residual(r, h, pos)
    return _residual_report(name, res, pos, _fixed_values(params or {}), list(conditions), grid, seed, tol)


# --------------------------------------------------------------------------
# discrepancy audit


@dataclass
class AuditEntry:
    name: str
    printed_ok: bool
    printed: dict
    variants: list = field(default_factory=list)  # (label, report dict)
    note: str = ""

    @property
    def repaired_by(self) -> list:
        return [label for label, rep in self.variants if rep.get("ok")]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "printed_ok": self.printed_ok,
            "printed": self.printed,
            "variants": [{"repair": label, **rep} for label, rep in self.variants],
            "repaired_by": self.repaired_by,
            "note": self.note,
        }


def audit(name: str, text: str, check, repairs: Sequence[tuple] = (), note: str = "") -> AuditEntry:
    """Run ``check(text) -> report`` on the printed text and on each catalogued
    single-token repair ``(old, new)``; variants are only tried when the printed
    text fails."""
    printed = check(text)
    entry = AuditEntry(name, bool(printed.ok), printed.to_dict(), note=note)
    if not printed.ok:
        for old, new in repairs:
            if old not in text:
                continue
            variant = text.replace(old, new, 1)
            rep = check(variant)
            entry.variants.append((f"{old} -> {new}", rep.to_dict()))
    return entry


def sign_flip_repairs(text: str) -> list:
    """Single sign flips of binary operators, as ``(old, new)`` pairs on a unique context."""
    out = []
    for i, ch in enumerate(text):
        if ch in "+-" and i > 0 and text[i - 1] == " ":
            ctx = text[max(0, i - 4) : i + 5]
            if text.count(ctx) == 1:
                out.append((ctx, ctx[: i - max(0, i - 4)] + ("-" if ch == "+" else "+") + ctx[i - max(0, i - 4) + 1 :]))
    return out


# --------------------------------------------------------------------------
# solution files


def solution_from_ini(text: str, source: str = "<string>", model: PdeModel | None = None) -> SolutionCandidate:
    """``[solution]`` with ``u``, optional ``params`` (``name`` or
    ``name=value``), ``positive``, ``conditions`` (comma separated Exprs that
    must be positive) and a generator given by ``tau``/``xi``/``eta``/``phi``."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ValueError(f"{source}: {exc}") from None
    if not cp.has_section("solution"):
        raise ValueError(f"{source}: missing [solution] section")
    sec = cp["solution"]
    params: dict = {}
    for tok in sec.get("params", "").replace(",", " ").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            params[k] = _number(v)
        else:
            params[tok] = None
    names = set(params) | set(model.params if model else ())
    ctx = ParseContext(params=frozenset(names))
    u = parse(sec["u"], ctx)
    pos = frozenset(sec.get("positive", "").replace(",", " ").split())
    conds = tuple(parse(c, ctx) for c in sec.get("conditions", "").split(",") if c.strip())
    gen = None
    if any(k in sec for k in ("tau", "xi", "eta", "phi")):
        gen = VectorField.parse(*(sec.get(k, "0") for k in ("tau", "xi", "eta", "phi")), ctx=ctx)
    if model is not None:
        for p in model.params:
            params.setdefault(p, None)
    return SolutionCandidate(u, params, pos, conds, gen, sec.get("name", Path(source).stem))


def _number(text: str):
    from fractions import Fraction

    try:
        return Fraction(text)
    except ValueError:
        return float(text)
