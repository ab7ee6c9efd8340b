"""Command-line entry point.

Exit status: 0 when every verdict holds, 1 when a verification fails, 2 on
usage, parse or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from liesym.expr import Symbol
from liesym.normal import normalize
from liesym.parsing import ParseContext, ParseError, parse, to_string
from liesym.zerotest import default_tol


class UsageError(Exception):
    pass


@dataclass
class Outcome:
    report: dict
    text: list = field(default_factory=list)
    ok: bool = True


def _csv(s: str | None) -> list:
    return [p for p in (s or "").replace(",", " ").split() if p]


def _model(name: str):
    from liesym.models import load_model

    return load_model(name)


def _algebra_for(args, model):
    """Catalog algebra for a builtin model, else the computed degree-1 basis."""
    from liesym.algebra import structure_table
    from liesym.ansatz import Ansatz, solve_symmetries
    from liesym.optimal import ALGEBRAS, load_algebra

    if getattr(args, "algebra", None):
        return load_algebra(args.algebra).algebra
    if args.model in ALGEBRAS:
        return load_algebra(args.model).algebra
    basis = solve_symmetries(model, Ansatz(degree=args.degree))
    names = [f"V{i + 1}" for i in range(len(basis))]
    return structure_table(basis.generators, names, model.params, model.positive)


# --------------------------------------------------------------------------
# subcommands


def cmd_symmetries(args) -> Outcome:
    from liesym.ansatz import Ansatz, solve_symmetries

    m = _model(args.model)
    b = solve_symmetries(m, Ansatz(degree=args.degree, u_degree=args.u_degree, tau=args.tau))
    gens = [g.to_dict() for g in b.generators]
    rep = {
        "model": m.name,
        "degree": args.degree,
        "dimension": len(b),
        "time_translation": b.time_translation,
        "generators": gens,
        "conditions": [to_string(c) + " != 0" for c in b.conditions],
    }
    text = [f"{m.name}: {len(b)} generators at degree {args.degree}" + (" (plus d/dt)" if b.time_translation else "")]
    text += [f"  V{i + 1} = {g}" for i, g in enumerate(b.generators)]
    text += [f"  assuming {c}" for c in rep["conditions"]]
    return Outcome(rep, text)


def cmd_commutators(args) -> Outcome:
    m = _model(args.model)
    alg = _algebra_for(args, m)
    n = alg.dim
    cells = {f"[{alg.names[i]},{alg.names[j]}]": alg.format_cell(i, j) for i in range(n) for j in range(n)}
    rep = {
        "model": m.name,
        "basis": {alg.names[i]: alg.basis[i].to_dict() for i in range(n)},
        "table": cells,
        "antisymmetric": alg.is_antisymmetric(),
        "jacobi_defects": [list(t) for t in alg.jacobi_defect()],
    }
    ok = rep["antisymmetric"] and not rep["jacobi_defects"]
    return Outcome(rep, [alg.format_table()], ok)


def cmd_optimal(args) -> Outcome:
    from liesym.optimal import essentiality, load_algebra, system_from_text, verify_optimal

    spec = load_algebra(args.algebra or args.model)
    system = None
    if args.catalog:
        system = system_from_text(Path(args.catalog).read_text(), spec.system.params)
    r = verify_optimal(spec, system, trials=args.trials, seed=args.seed, pattern=args.pattern)
    rep = r.to_dict()
    if args.essentiality:
        rep["essentiality"] = essentiality(spec, system, seed=args.seed)
    text = [f"{spec.name}: reached {r.reached}/{r.trials}, max reconstruction error {r.max_error:.3g}"]
    text += [f"  {k}: {v}" for k, v in sorted(r.counts.items())]
    for i, j, c, by in r.separation:
        text.append(f"  representatives {i + 1} and {j + 1}: {'separated' if c else 'NOT separated'} ({', '.join(by)})")
    for v, msg in r.failures[:5]:
        text.append(f"  failure at {[round(float(x), 6) for x in v]}: {msg}")
    return Outcome(rep, text, r.ok)


def _operator(expr: str, alg):
    """``V2 + alpha*V3`` over the basis names; other names become parameters."""
    from liesym.calculus import diff
    from liesym.expr import ZERO
    from liesym.prolong import VectorField

    names = tuple(alg.names)
    ctx = ParseContext(independents=(), dependent="_", params=frozenset(names), lenient=True)
    e = parse(expr, ctx)
    basis_syms = {Symbol(n) for n in names}
    coeffs = [normalize(diff(e, Symbol(n))) for n in names]
    if any(c.free_atoms & basis_syms for c in coeffs):
        raise UsageError(f"operator {expr!r} is not linear in the basis")
    v = VectorField(ZERO, ZERO, ZERO, ZERO)
    for c, g in zip(coeffs, alg.basis):
        if c != ZERO:
            v = v + g.scale(c)
    return v.normalized()


def cmd_reduce(args) -> Outcome:
    from liesym.similarity import NotReducible, Unsupported, invariants_of, jacobian_rank, reduce, verify_invariants

    m = _model(args.model)
    alg = _algebra_for(args, m)
    v = _operator(args.operator, alg)
    pos = set(_csv(args.positive)) | set(m.positive)
    inv = invariants_of(v, pos)
    rep = {"model": m.name, "operator": args.operator, "generator": v.to_dict()}
    if isinstance(inv, Unsupported) or not inv:
        rep["unsupported"] = inv.reason
        return Outcome(rep, [f"no invariants: {inv.reason}"], False)
    checks = verify_invariants(v, inv.invariants, pos, seed=args.seed)
    ranks = sorted(set(jacobian_rank(inv.invariants, pos, seed=args.seed)))
    rep["invariants"] = inv.to_dict()
    rep["invariant_checks"] = [{"invariant": to_string(i), "zero": c.zero, "certificate": c.certificate} for i, c in zip(inv.invariants, checks)]
    rep["jacobian_ranks"] = ranks
    text = [f"generator: {v}"]
    text += [f"  I{k + 1} = {to_string(i)}" for k, i in enumerate(inv.invariants)]
    text.append(f"  u = {rep['invariants']['u']} with z = {rep['invariants']['z']}")
    ok = all(c.zero for c in checks)
    try:
        r = reduce(m, inv, pos, seed=args.seed)
    except NotReducible as exc:
        rep["reduced"] = None
        rep["not_reducible"] = str(exc)
        text.append(f"  not reducible: {exc}")
        return Outcome(rep, text, False)
    rep["reduced"] = to_string(r)
    text.append(f"  reduced: {to_string(r)} = 0")
    if args.compare:
        from liesym.similarity import REDUCED_CONTEXT, proportional

        ctx = ParseContext(REDUCED_CONTEXT.independents, "h", REDUCED_CONTEXT.params, lenient=True)
        target = parse(args.compare, ctx)
        pr = proportional(r, target, pos | {"z"}, seed=args.seed)
        rep["compare"] = {"equation": to_string(target), "proportional": pr.zero, "certificate": pr.certificate}
        text.append(f"  proportional to the given equation: {pr.zero}")
        ok = ok and pr.zero
    return Outcome(rep, text, ok)


def cmd_verify_solution(args) -> Outcome:
    from liesym.similarity import solution_from_ini, verify_solution

    m = _model(args.model)
    s = solution_from_ini(Path(args.solution).read_text(), args.solution, m)
    r = verify_solution(m, s, grid=args.grid, seed=args.seed, tol=args.tol)
    rep = {"model": m.name, "solution": to_string(s.u), **r.to_dict()}
    text = [
        f"{s.name or args.solution}: {'PASS' if r.ok else 'FAIL'} ({r.certificate}, {r.points} points)",
        f"  max |residual| {r.max_abs:.3g}, max scaled {r.max_scaled:.3g}",
    ]
    if r.surface is not None:
        text.append(f"  invariant-surface residual (scaled) {r.surface:.3g}")
    if r.witness:
        text.append(f"  worst point {r.witness}")
    return Outcome(rep, text, r.ok)


def cmd_verify_reduced(args) -> Outcome:
    from liesym.similarity import REDUCED_CONTEXT, verify_reduced_solution

    ctx = ParseContext(REDUCED_CONTEXT.independents, "h", frozenset(_csv(args.params)), lenient=True)
    eq = parse(args.equation, ctx)
    h = parse(args.h, ParseContext(("t", "z"), "_", frozenset(_csv(args.params)), lenient=True))
    conds = [parse(c, ParseContext(("t", "z"), "_", lenient=True)) for c in _csv_semicolon(args.conditions)]
    r = verify_reduced_solution(eq, h, positive=_csv(args.positive), conditions=conds, grid=args.grid, seed=args.seed, tol=args.tol)
    rep = {"equation": to_string(eq), "h": to_string(h), **r.to_dict()}
    text = [f"{'PASS' if r.ok else 'FAIL'} ({r.certificate}, {r.points} points), max scaled residual {r.max_scaled:.3g}"]
    return Outcome(rep, text, r.ok)


def _csv_semicolon(s: str | None) -> list:
    return [p.strip() for p in (s or "").split(";") if p.strip()]


def cmd_inverse(args) -> Outcome:
    from liesym.inverse import inverse_check, load_family, load_symmetry

    sym = load_symmetry(args.symmetry)
    fam = load_family(args.family)
    r = inverse_check(sym, fam, samples=args.samples, seed=args.seed)
    rep = r.to_dict()
    text = [f"{sym.name} / {fam.name}: {'admits' if r.ok else 'does NOT admit'} the imposed symmetry"]
    if not r.equations:
        text.append("  the determining system vanishes identically")
    for e in r.equations:
        text.append(f"  [{e.label}] {'0' if e.zero else 'nonzero'} ({e.certificate or e.note or 'witness'})")
    bad = [b for b, f in r.sampled if f]
    if args.samples:
        text.append(f"  sampled parameter tuples: {len(r.sampled) - len(bad)}/{len(r.sampled)} pass")
    return Outcome(rep, text, r.ok)


def cmd_parse(args) -> Outcome:
    ctx = ParseContext(params=frozenset(_csv(args.params)), positive=frozenset(_csv(args.positive)), lenient=True)
    e = parse(args.expression, ctx, normal=False)
    n = normalize(e, ctx.positive)
    rep = {"input": args.expression, "parsed": to_string(e), "normal": to_string(n)}
    return Outcome(rep, [to_string(n)])


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="liesym", description="Lie point symmetries of 2D evolution equations.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print one JSON document")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="default 1e-9, or LIESYM_TOL")
    common.add_argument("--grid", type=int, default=200, help="sample points for residual checks")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("symmetries", parents=[common], help="generator basis within a polynomial ansatz")
    s.add_argument("--model", required=True)
    s.add_argument("--degree", type=int, default=1)
    s.add_argument("--u-degree", type=int, default=1)
    s.add_argument("--tau", choices=("fixed", "free", "zero"), default="fixed")
    s.set_defaults(func=cmd_symmetries)

    s = sub.add_parser("commutators", parents=[common], help="structure table of the symmetry algebra")
    s.add_argument("--model", required=True)
    s.add_argument("--algebra", help="algebra file (basis and representatives)")
    s.add_argument("--degree", type=int, default=1)
    s.set_defaults(func=cmd_commutators)

    s = sub.add_parser("optimal", parents=[common], help="check an optimal system of one-dimensional subalgebras")
    s.add_argument("--model", required=True)
    s.add_argument("--algebra")
    s.add_argument("--catalog", help="representative rows, one comma-separated vector per line")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--pattern", choices=("generic", "sparse"), default="generic")
    s.add_argument("--essentiality", action="store_true")
    s.set_defaults(func=cmd_optimal)

    s = sub.add_parser("reduce", parents=[common], help="invariants and reduced equation of an operator")
    s.add_argument("--model", required=True)
    s.add_argument("--algebra")
    s.add_argument("--degree", type=int, default=1)
    s.add_argument("--operator", required=True, help="e.g. 'V2 + alpha*V3'")
    s.add_argument("--positive", help="atoms taken positive, e.g. x,y,u")
    s.add_argument("--compare", help="expected reduced equation in h(t, z)")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("verify-solution", parents=[common], help="residual of a candidate solution")
    s.add_argument("--model", required=True)
    s.add_argument("--solution", required=True, help="file with a [solution] section")
    s.set_defaults(func=cmd_verify_solution)

    s = sub.add_parser("verify-reduced", parents=[common], help="residual of h(t, z) in a reduced equation")
    s.add_argument("--equation", required=True)
    s.add_argument("--h", required=True)
    s.add_argument("--params")
    s.add_argument("--positive")
    s.add_argument("--conditions", help="';'-separated expressions required positive")
    s.set_defaults(func=cmd_verify_reduced)

    s = sub.add_parser("inverse", parents=[common], help="which coefficient family admits an imposed generator")
    s.add_argument("--symmetry", required=True, help="builtin name or file with a [symmetry] section")
    s.add_argument("--family", required=True, help="builtin name or file with a [family] section")
    s.add_argument("--samples", type=int, default=0, help="extra random parameter tuples")
    s.set_defaults(func=cmd_inverse)

    s = sub.add_parser("parse", parents=[common], help="echo the parsed and normalized expression")
    s.add_argument("expression")
    s.add_argument("--params")
    s.add_argument("--positive")
    s.set_defaults(func=cmd_parse)
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.tol is None:
        args.tol = default_tol()
    try:
        out = args.func(args)
    except ParseError as exc:
        print(f"liesym: {exc}", file=stderr)
        return 2
    except (UsageError, ValueError, OSError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"liesym: {type(exc).__name__}: {msg}", file=stderr)
        return 2
    except ArithmeticError as exc:
        print(f"liesym: numerical failure: {exc}", file=stderr)
        return 1
    doc = {"command": args.command, "ok": out.ok, "seed": args.seed, "tol": args.tol, **out.report}
    if args.json:
        print(json.dumps(doc, sort_keys=True, indent=2, default=str), file=stdout)
    else:
        for line in out.text:
            print(line, file=stdout)
    return 0 if out.ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
