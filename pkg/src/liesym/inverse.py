"""Inverse symmetry problem: which coefficient families admit a given generator."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from liesym.expr import ZERO, Expr, Rational, Symbol, as_expr, subs
from liesym.models import LETTERS, PdeModel
from liesym.normal import normalize
from liesym.parsing import ParseContext, parse, to_string
from liesym.prolong import VectorField, invariance_expression, on_shell, split_by_jets
from liesym.zerotest import Indeterminate, is_zero

SYMMETRIES = ("ricci-type", "convdiff-type")
FAMILIES = ("power", "exponential", "convdiff-class")


class InverseError(ValueError):
    pass


@dataclass
class ImposedSymmetry:
    field: VectorField
    params: tuple = ()
    name: str = ""


@dataclass
class CoefficientFamily:
    coeffs: dict  # letter -> Expr
    params: tuple = ()
    constraints: dict = field(default_factory=dict)  # param -> Expr it is replaced by
    positive: frozenset = frozenset()
    name: str = ""

    def model(self) -> PdeModel:
        return PdeModel(self.name or "family", dict(self.coeffs), tuple(self.params), frozenset(self.positive))


def _split(s: str) -> list:
    return [p for p in s.replace(",", " ").split() if p]


def _solve_linear(eq: Expr, params: tuple) -> tuple:
    """Solve ``eq = 0`` for the last parameter it is linear in."""
    from liesym.calculus import diff
    from liesym.expr import add, mul, power

    for p in reversed(params):
        s = Symbol(p)
        if s not in eq.free_atoms:
            continue
        d = diff(eq, s)
        if s in d.free_atoms or d == ZERO:
            continue
        return p, normalize(add(s, mul(-1, eq, power(d, Rational(-1)))))
    raise InverseError(f"constraint {to_string(eq)} = 0 is not linear in any parameter")


def _parse_constraints(text: str, ctx: ParseContext, params: tuple) -> dict:
    """``k = (m + v)/n; c3 = 0`` or ``m + v = k*n``.

    A bare parameter on the left is a substitution; otherwise the equation is
    solved for the last declared parameter it is linear in.
    """
    from liesym.expr import add, mul

    out = {}
    for part in text.replace("\n", ";").split(";"):
        if not part.strip():
            continue
        if part.count("=") != 1:
            raise InverseError(f"constraint {part.strip()!r} is not of the form lhs = rhs")
        lhs, rhs = part.split("=")
        name = lhs.strip()
        r = parse(rhs, ctx)
        if name in params:
            out[name] = r
        else:
            eq = normalize(add(parse(lhs, ctx), mul(-1, r)))
            eq = _apply_constraints(eq, out)
            name, r = _solve_linear(eq, tuple(p for p in params if p not in out))
            out[name] = r
    return out


def _read(text: str, source: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise InverseError(f"{source}: {exc}") from None
    return cp


def symmetry_from_ini(text: str, source: str = "<string>") -> ImposedSymmetry:
    cp = _read(text, source)
    if not cp.has_section("symmetry"):
        raise InverseError(f"{source}: missing [symmetry] section")
    sec = cp["symmetry"]
    params = tuple(_split(sec.get("params", "")))
    ctx = ParseContext(params=frozenset(params))
    v = VectorField.parse(*(sec.get(k, "0") for k in ("tau", "xi", "eta", "phi")), ctx=ctx)
    return ImposedSymmetry(v, params, sec.get("name", Path(source).stem))


def family_from_ini(text: str, source: str = "<string>") -> CoefficientFamily:
    cp = _read(text, source)
    if not cp.has_section("family"):
        raise InverseError(f"{source}: missing [family] section")
    sec = cp["family"]
    params = tuple(_split(sec.get("params", "")))
    positive = frozenset(_split(sec.get("positive", "")))
    ctx = ParseContext(params=frozenset(params), positive=positive)
    coeffs = {k: parse(sec[k], ctx) for k in LETTERS if sec.get(k, "").strip()}
    cons = _parse_constraints(sec.get("constraints", ""), ctx, params)
    return CoefficientFamily(coeffs, params, cons, positive, sec.get("name", Path(source).stem))


def _load(name: str, builtins: tuple, prefix: str, reader):
    if name in builtins:
        text = resources.files("liesym").joinpath("catalog", f"{prefix}-{name}.ini").read_text()
        return reader(text, f"{prefix}-{name}.ini")
    p = Path(name)
    if not p.exists():
        raise InverseError(f"unknown {prefix} {name!r} (builtins: {', '.join(builtins)})")
    return reader(p.read_text(), str(p))


def load_symmetry(name: str) -> ImposedSymmetry:
    return _load(name, SYMMETRIES, "symmetry", symmetry_from_ini)


def load_family(name: str) -> CoefficientFamily:
    return _load(name, FAMILIES, "family", family_from_ini)


@dataclass
class EquationVerdict:
    label: str
    zero: bool
    certificate: str | None
    residual: float = 0.0
    witness: dict | None = None
    note: str = ""


@dataclass
class InverseReport:
    symmetry: str
    family: str
    equations: list  # EquationVerdicts from the symbolic check
    sampled: list = field(default_factory=list)  # (bindings, list of failing labels)

    @property
    def ok(self) -> bool:
        return all(e.zero for e in self.equations) and all(not bad for _, bad in self.sampled)

    def to_dict(self) -> dict:
        return {
            "symmetry": self.symmetry,
            "family": self.family,
            "ok": self.ok,
            "equations": [e.__dict__ for e in self.equations],
            "sampled": [{"bindings": {k: str(v) for k, v in b.items()}, "failing": bad} for b, bad in self.sampled],
        }


def determining_equations(v: VectorField, m: PdeModel) -> tuple:
    """Jet-monomial labels and the corresponding coefficient expressions."""
    e = on_shell(invariance_expression(m, v), m)
    return split_by_jets(e, m.positive)


def _verdicts(v: VectorField, m: PdeModel, seed: int) -> list:
    labels, eqs = determining_equations(v, m)
    out = []
    for lab, eq in zip(labels, eqs):
        try:
            r = is_zero(eq, m.positive | set(m.params) & m.positive, seed=seed)
        except Indeterminate as exc:
            out.append(EquationVerdict(to_string(lab), False, None, note=f"domain: {exc}"))
            continue
        out.append(EquationVerdict(to_string(lab), r.zero, r.certificate, r.residual, r.witness))
    return out


def _apply_constraints(e: Expr, cons: dict) -> Expr:
    return subs(e, {Symbol(k): v for k, v in cons.items()}) if cons else e


def inverse_check(
    sym: ImposedSymmetry,
    fam: CoefficientFamily,
    samples: int = 0,
    seed: int = 0,
    bindings: dict | None = None,
) -> InverseReport:
    """Substitute the family into the determining system of the imposed generator.

    Parameters stay symbolic for the main verdicts (the zero test samples them
    when exact cancellation fails).  ``samples`` additional random rational
    parameter tuples are checked one by one.  ``bindings`` fixes some
    parameters first.
    """
    cons = dict(fam.constraints)
    fixed = {Symbol(k): as_expr(v) for k, v in (bindings or {}).items()}
    v = sym.field.map(lambda c: normalize(subs(_apply_constraints(c, cons), fixed), fam.positive))
    coeffs = {k: normalize(subs(_apply_constraints(c, cons), fixed), fam.positive) for k, c in fam.coeffs.items()}
    params = tuple(dict.fromkeys(sym.params + fam.params))
    m = PdeModel(fam.name, coeffs, params, fam.positive)
    rep = InverseReport(sym.name, fam.name, _verdicts(v, m, seed))
    if samples:
        rng = np.random.default_rng(seed)
        free = [p for p in params if p not in cons and p not in (bindings or {})]
        for _ in range(samples):
            b = {}
            for p in free:
                q = Fraction(int(rng.integers(1, 9)), int(rng.integers(1, 5)))
                b[p] = q if p in fam.positive or rng.random() < 0.5 else -q
            sub = {Symbol(k): as_expr(val) for k, val in b.items()}
            vs = v.map(lambda c: normalize(subs(c, sub), fam.positive))
            cs = {k: normalize(subs(c, sub), fam.positive) for k, c in coeffs.items()}
            ms = PdeModel(fam.name, cs, (), fam.positive)
            bad = [e.label for e in _verdicts(vs, ms, seed) if not e.zero]
            rep.sampled.append((b, bad))
    return rep


def specialize(fam: CoefficientFamily, bindings: dict, keep: Iterable[str] = (), name: str | None = None) -> PdeModel:
    """A concrete model; ``keep`` names parameters that stay symbolic."""
    keep = tuple(keep)
    sub = {Symbol(k): as_expr(v) for k, v in bindings.items()}
    coeffs = {}
    for k, c in fam.coeffs.items():
        coeffs[k] = normalize(subs(_apply_constraints(c, fam.constraints), sub), fam.positive)
    left = set()
    for c in coeffs.values():
        left |= {a.name for a in c.free_atoms if isinstance(a, Symbol) and a.name in fam.params}
    left -= set(keep)
    if left:
        raise InverseError(f"binding leaves parameters free: {', '.join(sorted(left))}")
    return PdeModel(name or fam.name, coeffs, keep, fam.positive)


def same_coefficients(m1: PdeModel, m2: PdeModel) -> bool:
    """Exact equality of the normalized coefficients A..G."""
    pos = m1.positive | m2.positive
    return all(normalize(m1.coeffs[k], pos) == normalize(m2.coeffs[k], pos) for k in LETTERS)


# --------------------------------------------------------------------------
# the general linear-sector solution as a verification template


def template_family(
    functions: dict,
    exponents: str = "derived",
    c3_zero: bool = False,
    k_zero: bool = False,
    constraints: dict | None = None,
) -> CoefficientFamily:
    """Instance of the general solution for ``xi = m x + c1, eta = v y + c2,
    phi = k u + c3``.

    ``functions`` maps ``"A1'"``, ``"A1''"`` ... (letters A..G, one or two
    primes) to grammar expressions in the arguments ``X, Y, Z`` (the
    invariants built from the primed or double-primed construction).
    ``exponents`` is ``"derived"`` (weights forced by the scaling) or
    ``"printed"`` (the alternative exponent table, kept for the audit).
    With ``k_zero`` the u-scaling is absent and ``Z`` becomes
    ``(m u - c3 ln xi)/m`` (resp. with ``v, eta``).  ``constraints`` maps
    parameter names to grammar expressions.
    """
    params = ("m", "v", "k", "c1", "c2", "c3")
    ctx = ParseContext(params=frozenset(params))
    xi = parse("m*x + c1", ctx)
    eta = parse("v*y + c2", ctx)
    phi = parse("k*u + c3", ctx)
    from liesym.expr import add, ln, mul, power

    inv = Rational(-1)
    args1 = {
        "X": mul(eta, power(xi, mul(-1, Symbol("v"), power(Symbol("m"), inv))), power(Symbol("v"), inv)),
        "Y": mul(add(mul(Symbol("m"), Symbol("t")), mul(-1, ln(xi))), power(Symbol("m"), inv)),
        "Z": mul(phi, power(xi, mul(-1, Symbol("k"), power(Symbol("m"), inv))), power(Symbol("k"), inv)),
    }
    args2 = {
        "X": mul(xi, power(eta, mul(-1, Symbol("m"), power(Symbol("v"), inv))), power(Symbol("m"), inv)),
        "Y": mul(add(mul(Symbol("v"), Symbol("t")), mul(-1, ln(eta))), power(Symbol("v"), inv)),
        "Z": mul(phi, power(eta, mul(-1, Symbol("k"), power(Symbol("v"), inv))), power(Symbol("k"), inv)),
    }
    if k_zero:
        args1["Z"] = parse("(m*u - c3*ln(m*x + c1))/m", ctx)
        args2["Z"] = parse("(v*u - c3*ln(v*y + c2))/v", ctx)
    derived = {
        "A": ("(m + v)/m", "(m + v)/v"),
        "B": ("(m + v - k)/m", "(m + v - k)/v"),
        "C": ("2", "2*m/v"),
        "D": ("2*v/m", "2"),
        "E": ("v/m", "1"),
        "F": ("1", "m/v"),
        "G": ("k/m", "k/v"),
    }
    printed = {
        "A": ("(m + v)/m", "(m + v)/v"),
        "B": ("(m + v - k)/m", "(m + v - k)/v"),
        "C": ("2", "2"),
        "D": ("2*v/m", "2*m/v"),
        "E": ("v/m", "m/v"),
        "F": ("v/m", "m/v"),
        "G": ("k/m", "k/v"),
    }
    table = derived if exponents == "derived" else printed
    fctx = ParseContext(independents=(), dependent="_", params=frozenset({"X", "Y", "Z"}))
    coeffs = {}
    for letter in LETTERS:
        parts = []
        for primes, base, args, ex in (("'", xi, args1, table[letter][0]), ("''", eta, args2, table[letter][1])):
            key = letter + primes
            if key not in functions:
                continue
            f = parse(functions[key], fctx)
            f = subs(f, {Symbol(n): a for n, a in args.items()})
            parts.append(mul(f, power(base, parse(ex, ctx))))
        if parts:
            coeffs[letter] = add(*parts)
    cons = {"c3": ZERO} if c3_zero else {}
    if k_zero:
        cons["k"] = ZERO
    for name, text in (constraints or {}).items():
        cons[name] = parse(text, ctx)
    if cons:
        # constraints may refer to each other (k given in terms of a free n, say)
        coeffs = {k: _apply_constraints(c, cons) for k, c in coeffs.items()}
    return CoefficientFamily(coeffs, params, cons, frozenset(), f"template-{exponents}")


def template_symmetry() -> ImposedSymmetry:
    """The linear-sector generator ``d/dt + (m x + c1) d/dx + (v y + c2) d/dy + (k u + c3) d/du``."""
    ctx = ParseContext(params=frozenset({"m", "v", "k", "c1", "c2", "c3"}))
    v = VectorField.parse("1", "m*x + c1", "v*y + c2", "k*u + c3", ctx=ctx)
    return ImposedSymmetry(v, ("m", "v", "k", "c1", "c2", "c3"), "linear-sector")


def recovers(sym: ImposedSymmetry, m: PdeModel, bindings: dict, degree: int = 1) -> bool:
    """Whether the forward solver, run on ``m``, finds the imposed generator.

    ``bindings`` fixes the generator's parameters.  The solver reports the
    part complementing d/dt, so a generator with constant tau is compared
    after removing its d/dt component.
    """
    from liesym.ansatz import Ansatz, solve_symmetries, span_contains
    from liesym.expr import Jet

    sub = {Symbol(k): as_expr(v) for k, v in bindings.items()}
    g = sym.field.map(lambda c: normalize(subs(c, sub), m.positive))
    tau = g.tau
    if tau.free_atoms - set(Symbol(p) for p in m.params):
        raise InverseError("tau must be constant for the comparison")
    basis = solve_symmetries(m, Ansatz(degree=degree))
    if tau != ZERO and not basis.time_translation:
        return False
    g = VectorField(ZERO, g.xi, g.eta, g.phi)
    if g.is_zero():
        return True
    return span_contains(basis, [g], m.params)
