"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line, then asserts.  The
discrepancy audit collected along the way is written to ``audit_report.json``
next to the test output.
"""

import json
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from liesym.algebra import adjoint, adjoint_symbolic
from liesym.ansatz import Ansatz, solve_symmetries, span_contains, span_equal
from liesym.expr import FuncDeriv, Symbol, add, mul
from liesym.inverse import inverse_check, load_family, load_symmetry, same_coefficients, specialize
from liesym.models import load_model
from liesym.optimal import load_algebra, reduce_to_representative, verify_optimal
from liesym.parsing import ParseContext, parse
from liesym.prolong import VectorField, determining_system, equivalent_systems
from liesym.similarity import (
    REDUCED_CONTEXT,
    AuditEntry,
    InvariantSet,
    SolutionCandidate,
    audit,
    invariants_of,
    jacobian_rank,
    proportional,
    reduce,
    sign_flip_repairs,
    verify_invariants,
    verify_reduced_solution,
    verify_solution,
)

ROOT = Path(__file__).resolve().parent.parent
CTX = ParseContext(params=frozenset({"alpha", "beta", "gamma", "v"}))
R = REDUCED_CONTEXT.with_params("alpha", "beta", "gamma", "v", "q1", "q2", "r1", "r2", "r3", "r4", "p1", "p2", "p3", "p4")
AUDIT: list = []


def P(text, *params):
    return parse(text, CTX.with_params(*params))


def verdict(capsys, n, ok, title, details=()):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} - {title}")
        for d in details:
            print(f"    {d}")
    return ok


@pytest.fixture(scope="module", autouse=True)
def audit_report():
    yield
    doc = [e.to_dict() if isinstance(e, AuditEntry) else e for e in AUDIT]
    (ROOT / "audit_report.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str))


@pytest.fixture(scope="module")
def ricci():
    return load_model("ricci")


@pytest.fixture(scope="module")
def convdiff():
    return load_model("convdiff")


# --------------------------------------------------------------------------


def test_criterion_1_ricci_symmetries(capsys, ricci):
    expected = [
        VectorField.parse(xi="x", phi="-u"),
        VectorField.parse(xi="1"),
        VectorField.parse(eta="y", phi="-u"),
        VectorField.parse(eta="1"),
    ]
    b1 = solve_symmetries(ricci, Ansatz(degree=1))
    dims = {d: len(solve_symmetries(ricci, Ansatz(degree=d))) for d in (2, 3)}
    ok = span_equal(b1, expected) and b1.time_translation and dims == {2: 6, 3: 8}
    assert verdict(capsys, 1, ok, "ricci symmetry recovery", [f"degree 1: {len(b1)} (+ d/dt), degree 2: {dims[2]}, degree 3: {dims[3]}"])


def test_criterion_2_convdiff_symmetries(capsys, convdiff):
    c = convdiff.context
    expected = [
        VectorField.parse(xi="(x - v*t)/2", eta="y/2", phi="u", ctx=c),
        VectorField.parse(xi="y", eta="-(x - v*t)", ctx=c),
        VectorField.parse(xi="1"),
        VectorField.parse(eta="1"),
    ]
    b = solve_symmetries(convdiff, Ansatz(degree=1))
    ok = span_equal(b, expected, ("v",)) and span_contains(b, expected[1:2], ("v",)) and b.time_translation
    assert verdict(capsys, 2, ok, "convdiff symmetry recovery over Q(v)", [f"dimension {len(b)}, rotation generator contained"])


def test_criterion_3_determining_system(capsys, convdiff):
    xyt, xytu = ("x", "y", "t"), ("x", "y", "t", "u")
    xi = lambda *d: FuncDeriv("xi", xyt, d)
    eta = lambda *d: FuncDeriv("eta", xyt, d)
    phi = lambda *d: FuncDeriv("phi", xytu, d)
    u, v = P("u"), Symbol("v")
    reference = [
        phi("u", "u"),
        add(xi("y"), eta("x")),
        add(mul(2, u, xi("x")), mul(-1, phi())),
        add(mul(2, u, eta("y")), mul(-1, phi())),
        add(mul(-1, eta("t")), mul(-1, v, eta("x")), mul(u, eta("x", "x")), mul(u, eta("y", "y")), mul(-2, u, phi("y", "u"))),
        add(mul(-1, xi("t")), mul(-1, v, xi("x")), mul(u, xi("x", "x")), mul(u, xi("y", "y")), mul(-2, u, phi("x", "u"))),
        add(phi("t"), mul(v, phi("x")), mul(-1, u, phi("x", "x")), mul(-1, u, phi("y", "y"))),
    ]
    d = determining_system(convdiff, xi_eta_args=xyt)
    ok = equivalent_systems(d.equations, reference, d.unknowns)
    assert verdict(capsys, 3, ok, "generated determining system <=> reference seven equations", [f"{len(d)} generated equations"])


def _table(alg):
    n = alg.dim
    return {(i, j): tuple(alg.c[i][j]) for i in range(n) for j in range(n)}


def _reference(cells, n=4):
    out = {(i, j): tuple(Fraction(0) for _ in range(n)) for i in range(n) for j in range(n)}
    for (i, j), (k, c) in cells.items():
        vec = [Fraction(0)] * n
        vec[k - 1] = Fraction(c)
        out[(i - 1, j - 1)] = tuple(vec)
    return out


def test_criterion_4_structure_tables(capsys):
    ricci_pub = _reference({(1, 2): (2, -1), (2, 1): (2, 1), (3, 4): (4, -1), (4, 3): (4, 1)})
    conv_pub = _reference({
        (1, 3): (3, Fraction(-1, 2)), (1, 4): (4, 1), (2, 3): (4, 1), (2, 4): (3, -1),
        (3, 1): (3, Fraction(1, 2)), (3, 2): (4, -1), (4, 1): (4, 1), (4, 2): (3, 1),
    })
    details, ok = [], True
    for name, pub in (("ricci", ricci_pub), ("convdiff", conv_pub)):
        alg = load_algebra(name).algebra
        got = _table(alg)
        bad = [(i, j) for (i, j) in sorted(pub) if got[(i, j)] != pub[(i, j)]]
        ok &= not bad
        details.append(f"{name}: {16 - len(bad)}/16 cells match")
        for i, j in bad:
            names = alg.names
            details.append(f"  [{names[i]},{names[j]}] computed {alg.format_cell(i, j)}, reference "
                           + (" + ".join(f"{c}*V{k + 1}" for k, c in enumerate(pub[(i, j)]) if c) or "0"))
            AUDIT.append({"name": f"{name} structure table [{names[i]},{names[j]}]", "computed": alg.format_cell(i, j),
                          "reference": [str(c) for c in pub[(i, j)]], "printed_ok": False})
    assert verdict(capsys, 4, ok, "structure tables cell for cell", details)


def test_criterion_5_adjoint_closed_forms(capsys):
    ric = load_algebra("ricci").algebra
    cd = load_algebra("convdiff").algebra
    m1 = adjoint_symbolic(ric, 0)
    m2 = adjoint_symbolic(ric, 1)
    m3 = adjoint_symbolic(cd, 1)
    col = lambda m, j: [m[k][j] for k in range(4)]
    checks = {
        "Ad(exp(eps V1)) V2 = e^eps V2": col(m1, 1) == [P("0"), P("exp(eps)", "eps"), P("0"), P("0")],
        "Ad(exp(eps V2)) V1 = V1 - eps V2": col(m2, 0) == [P("1"), P("-eps", "eps"), P("0"), P("0")],
        "Ad(exp(eps V2)) V3 = cos eps V3 - sin eps V4": col(m3, 2) == [P("0"), P("0"), P("cos(eps)", "eps"), P("-sin(eps)", "eps")],
    }
    worst = 0.0
    for eps in np.random.default_rng(0).uniform(-3, 3, 20):
        for alg in (ric, cd):
            for i in range(4):
                worst = max(worst, float(np.abs(adjoint(alg, i, eps, "numeric").matrix - adjoint(alg, i, eps, "closed").matrix).max()))
    ok = all(checks.values()) and worst <= 1e-12
    details = [f"{k}: {v}" for k, v in checks.items()] + [f"numeric vs closed over 20 eps: {worst:.2e}"]
    assert verdict(capsys, 5, ok, "adjoint closed forms", details)


def test_criterion_6_optimal_systems(capsys):
    t0 = time.time()
    reps = {n: verify_optimal(load_algebra(n), trials=1000, seed=0) for n in ("ricci", "convdiff")}
    spec = load_algebra("convdiff")
    b4 = 0.7
    quad = reduce_to_representative(spec, [0.0, 0.0, 1.0, b4], mode="quadratic")
    exact = reduce_to_representative(spec, [0.0, 0.0, 1.0, b4], mode="exact")
    elapsed = time.time() - t0
    details = [f"{n}: {r.reached}/{r.trials} reached, max error {r.max_error:.2e}, counts {r.counts}" for n, r in reps.items()]
    details.append(f"quadratic-angle branch at b4={b4}: residual V4 component {quad.image[3]:.4f}; exact angle: error {exact.error:.1e}")
    details.append(f"runtime {elapsed:.1f} s")
    AUDIT.append({"name": "convdiff V3 + b4 V4 rotation angle", "printed_ok": False,
                  "quadratic_residual_V4": float(quad.image[3]), "exact_angle_error": exact.error,
                  "note": "the quadratic is the second-order truncation of tan(eps) = b4"})
    ok = all(r.reached == 1000 and r.max_error <= 1e-10 for r in reps.values()) and exact.ok and elapsed <= 60
    assert verdict(capsys, 6, ok, "optimal systems reached from 1000 random vectors", details)


def _invariance_report(v, cands, positive=()):
    class Rep:
        def __init__(self, rs):
            self.ok = all(r.zero for r in rs)
            self.rs = rs

        def to_dict(self):
            return {"ok": self.ok, "zero": [r.zero for r in self.rs], "witness": [r.witness for r in self.rs]}

    return lambda text: Rep(verify_invariants(v, [P(s, "alpha", "beta") for s in text.split(";")], positive))


def test_criterion_7_invariants(capsys):
    sets = [
        ("ricci V2 + alpha V3", VectorField.parse(xi="1", eta="alpha*y", phi="-alpha*u", ctx=CTX), ["t", "y*exp(-alpha*x)", "y*u"], {"x", "y", "u"}),
        ("ricci V1 + beta V3", VectorField.parse(xi="x", eta="beta*y", phi="-(1 + beta)*u", ctx=CTX),
         ["t", "y*x^(-beta)", "y^((1 + beta)/beta)*u"], {"x", "y", "u"}),
        ("convdiff V2", VectorField.parse(xi="y", eta="-(x - v*t)", ctx=CTX), ["t", "v*t*x - (x^2)/2 - (y^2)/2", "u"], set()),
        ("convdiff V3", VectorField.parse(xi="1"), ["t", "y", "u"], set()),
    ]
    details, ok = [], True
    for name, v, invs, pos in sets:
        rs = verify_invariants(v, [P(s, "alpha", "beta") for s in invs], pos)
        ranks = set(jacobian_rank([P(s, "alpha", "beta") for s in invs], pos))
        good = all(r.zero for r in rs) and ranks == {3}
        ok &= good
        details.append(f"{name}: {[r.certificate for r in rs]}, jacobian rank {sorted(ranks)}")
    spiral = VectorField.parse(xi="(x - v*t)/2 + alpha*y", eta="y/2 + alpha*(v*t - x) + beta", phi="u", ctx=CTX)
    printed_i2 = "(y/2 + alpha*(v*t - x) + beta)/(x/2 + alpha*y - v*t/2)"
    printed_i3 = "u/((y^2)/2 + alpha*(v*t - x) + beta)^2"
    r2 = verify_invariants(spiral, [P(printed_i2, "alpha", "beta")])[0]
    r3 = verify_invariants(spiral, [P(printed_i3, "alpha", "beta")])[0]
    e2 = audit("convdiff spiral invariant I2 (ratio form)", printed_i2, _invariance_report(spiral, None),
               note="the ratio of the two affine components is not constant along the spiral flow")
    e3 = audit("convdiff spiral invariant I3", printed_i3, _invariance_report(spiral, None), [("(y^2)/2", "y/2")])
    AUDIT.extend([e2, e3])
    inv = invariants_of(spiral)
    good_own = bool(inv) and all(r.zero for r in verify_invariants(spiral, inv.invariants))
    details.append(f"spiral printed I2 invariant: {r2.zero} (audit entry logged; witness {r2.witness})")
    details.append(f"spiral printed I3 invariant: {r3.zero}; computed invariants verified: {good_own}")
    ok &= (not r2.zero) and not e2.printed_ok and good_own
    assert verdict(capsys, 7, ok, "invariants verified; printed spiral I2 reported non-invariant", details)


def test_criterion_8_reductions(capsys, ricci, convdiff):
    details, ok = [], True
    # ricci V2 + alpha V3
    g1 = VectorField.parse(xi="1", eta="alpha*y", phi="-alpha*u", ctx=CTX)
    red1 = reduce(ricci, invariants_of(g1, {"x", "y", "u"}), {"x", "y", "u"})
    printed1 = "h_t*h^2 - alpha*z^2*h*h_2z - alpha*z^2*h_z^2 + alpha*z*h*h_z"

    class Prop:
        def __init__(self, r):
            self.ok = r.zero
            self.r = r

        def to_dict(self):
            return {"ok": self.ok, "certificate": self.r.certificate, "witness": self.r.witness}

    check1 = lambda text: Prop(proportional(red1, parse(text, R), {"z"}))
    e1 = audit("ricci V2 + alpha V3 reduced equation", printed1, check1, sign_flip_repairs(printed1))
    AUDIT.append(e1)
    ok &= e1.printed_ok
    details.append(f"ricci V2 + alpha V3: printed form proportional: {e1.printed_ok}; single sign repairs that match: {e1.repaired_by}")
    # ricci V1 + beta V3
    g2 = VectorField.parse(xi="x", eta="beta*y", phi="-(1 + beta)*u", ctx=CTX)
    red2 = reduce(ricci, invariants_of(g2, {"x", "y", "u"}), {"x", "y", "u"})
    p2 = proportional(red2, parse("h_t*h^2*z^(-1/beta - 2) + beta*h*h_2z + beta*z^(-1)*h*h_z - beta*h_z^2", R), {"z"})
    ok &= p2.zero
    details.append(f"ricci V1 + beta V3: proportional {p2.zero} ({p2.certificate})")
    # convdiff rotation with the reference invariants
    g3 = VectorField.parse(xi="y", eta="-(x - v*t)", ctx=CTX)
    inv3 = InvariantSet(g3, (P("t"), P("v*t*x - (x^2)/2 - (y^2)/2"), P("u")))
    red3 = reduce(convdiff, inv3)
    p3 = proportional(red3, parse("h_t + (2*z - v^2*t^2)*h*h_2z + 2*h*h_z + v^2*t*h_z", R))
    ok &= p3.zero
    details.append(f"convdiff V2: proportional {p3.zero} ({p3.certificate})")
    assert verdict(capsys, 8, ok, "reductions match up to a nonzero factor", details)


def _adjudicate(name, report, entries):
    """Residual within tolerance, or a logged discrepancy carrying the failing sample."""
    if report.ok and report.max_scaled <= 1e-8:
        return True, f"{name}: residual {report.max_scaled:.1e} ({report.certificate})"
    entry = {"name": name, "printed_ok": False, **report.to_dict()}
    entries.append(entry)
    return bool(report.witness), f"{name}: discrepancy logged, failing sample {report.witness}"


def test_criterion_9_solutions(capsys, ricci, convdiff):
    details, ok = [], True

    def sol(m, text, params=(), **kw):
        s = SolutionCandidate(P(text, *params), dict.fromkeys(list(params) + list(m.params)), name=text, **kw)
        return verify_solution(m, s, grid=200, seed=0, tol=1e-10)

    exact = [
        ("convdiff rotation solution", convdiff, "(2*v*t*x - x^2 - y^2 - v^2*t^2 + 2*q1)/(4*t + 2*q2)", ("q1", "q2"), {}),
        ("convdiff translation solution", convdiff, "(q1/2*y^2 + q3*y + q4)/(q2 - q1*t)", ("q1", "q2", "q3", "q4"), {}),
        ("ricci g(x)/y, g = 1 + x + x^2", ricci, "(1 + x + x^2)/y", (), {"positive": frozenset({"y"})}),
        ("ricci g(x)/y, g = exp(x)", ricci, "exp(x)/y", (), {"positive": frozenset({"y"})}),
        ("ricci g(x)/y, g = 2 + sin(x)", ricci, "(2 + sin(x))/y", (), {"positive": frozenset({"y"})}),
        ("ricci g(x)", ricci, "2 + cos(x)", (), {}),
    ]
    for name, m, text, params, kw in exact:
        r = sol(m, text, params, **kw)
        ok &= r.ok and r.max_scaled <= 1e-10
        details.append(f"{name}: {'ok' if r.ok else 'FAIL'} ({r.certificate}, max scaled {r.max_scaled:.1e})")
    # reduced solutions in their reduced equations
    rr = verify_reduced_solution(parse("h_t + (2*z - v^2*t^2)*h*h_2z + 2*h*h_z + v^2*t*h_z", R),
                                 parse("(2*z - v^2*t^2 + 2*q1)/(4*t + 2*q2)", R))
    spiral_red = parse("h_t - 2*(alpha^2 + 1/4)*z^3*h*h_z - 4*(alpha^2 + 1/4)*z*h*h_z - 2*(alpha^2 + 1/4)*h^2", R)
    rs = verify_reduced_solution(spiral_red, parse("-1/(2*(alpha^2 + 1/4)*t - gamma)", R))
    ok &= rr.ok and rs.ok
    details.append(f"rotation profile in its reduced equation: {rr.certificate}; spiral profile in its reduced equation: {rs.certificate}")
    # spiral solution: printed fails, y/2 passes
    gen = VectorField.parse(xi="(x - v*t)/2 + alpha*y", eta="y/2 - alpha*(x - v*t) + beta", phi="u", ctx=CTX)
    spiral = "-1/(2*(alpha^2 + 1/4)*t - gamma)*((y^2)/2 + alpha*(v*t - x) + beta)^2"
    check = lambda text: verify_solution(
        convdiff,
        SolutionCandidate(P(text, "alpha", "beta", "gamma"), dict.fromkeys(["alpha", "beta", "gamma", "v"]), generator=gen, name=text),
        grid=200,
    )
    e = audit("convdiff spiral solution", spiral, check, [("(y^2)/2", "y/2")],
              note="the y/2 variant solves the equation; its invariant-surface residual is reported alongside")
    AUDIT.append(e)
    fixed = e.variants[0][1] if e.variants else {}
    ok &= (not e.printed_ok) and fixed.get("ok", False)
    details.append(f"spiral solution as printed: {'PASS' if e.printed_ok else 'FAIL'}; y/2 variant: "
                   f"{'PASS' if fixed.get('ok') else 'FAIL'} (surface residual {fixed.get('surface_residual')})")
    # tanh profiles: adjudicated
    tanh_params = ("r1", "r2", "r3", "r4")
    u16 = "-1/(2*y)*(r3*t + r2*r3/(2*r1))*(-1 + tanh(sqrt(alpha*r3)*(r4 - alpha*x + ln(y))/(2*alpha))^2)"
    r16 = verify_solution(ricci, SolutionCandidate(P(u16, *tanh_params), dict.fromkeys(("alpha",) + tanh_params),
                                                   positive=frozenset({"alpha", "r3", "y"}), name="ricci tanh solution (exp scaling)"))
    h15 = parse("-1/2*(r3*t + r2*r3/(2*r1))*(-1 + tanh(sqrt(alpha*r3)*(r4 - ln(z))/(2*alpha))^2)", R)
    printed13 = parse("h_t*h^2 - alpha*z^2*h*h_2z - alpha*z^2*h_z^2 + alpha*z*h*h_z", R)
    corrected13 = parse("h_t*h^2 + alpha*z^2*h*h_2z - alpha*z^2*h_z^2 + alpha*z*h*h_z", R)
    r15p = verify_reduced_solution(printed13, h15, positive={"alpha", "r3", "z"}, name="tanh profile in the printed reduced equation")
    r15c = verify_reduced_solution(corrected13, h15, positive={"alpha", "r3", "z"}, name="tanh profile in the corrected reduced equation")
    u22 = "-1/(2*p3^2*p1*beta)*(p1*t + p2)/(x*y)*(-1 + tanh((p4*beta - ln(y) + beta*ln(x))/(2*p3*beta))^2)"
    r22 = verify_solution(ricci, SolutionCandidate(P(u22, "p1", "p2", "p3", "p4"), dict.fromkeys(["beta", "p1", "p2", "p3", "p4"]),
                                                   positive=frozenset({"x", "y"}), name="ricci tanh solution (power scaling)"))
    h21 = parse("-(p1*t + p2)/(2*p3^2*p1*beta)*z^(1/beta)*(-1 + tanh((p4*beta - ln(z))/(2*p3*beta))^2)", R)
    red20 = parse("h_t*h^2*z^(-1/beta - 2) + beta*h*h_2z + beta*z^(-1)*h*h_z - beta*h_z^2", R)
    r21 = verify_reduced_solution(red20, h21, positive={"z"}, name="power-scaling profile in its reduced equation")
    for rep in (r16, r15p, r15c, r22, r21):
        good, line = _adjudicate(rep.name, rep, AUDIT)
        ok &= good
        details.append(line)
    assert verdict(capsys, 9, ok, "solution certification and audit", details)


def test_criterion_10_inverse_problem(capsys):
    ricci_sym = load_symmetry("ricci-type")
    power = load_family("power")
    expo = load_family("exponential")
    conv = load_family("convdiff-class")
    rp = inverse_check(ricci_sym, power)
    re_ = inverse_check(ricci_sym, expo)
    rc = inverse_check(load_symmetry("convdiff-type"), conv, samples=25, seed=0)
    s1 = same_coefficients(specialize(power, {"n": -1}), load_model("ricci"))
    s2 = same_coefficients(specialize(conv, {"c3": 1, "c4": 0, "c5": 0, "c6": 0, "c1": 1, "c2": 1}, keep=("v",)), load_model("convdiff"))
    ok = rp.ok and re_.ok and rc.ok and len(rc.sampled) == 25 and s1 and s2
    details = [
        f"power family, k = (m + v)/n symbolic: {rp.ok}",
        f"exponential family, k = 0, c3 = m + v: {re_.ok}",
        f"convective family at 25 sampled tuples: {sum(not b for _, b in rc.sampled)}/25",
        f"power family n = -1 gives the ricci coefficients: {s1}",
        f"convective family degenerates to the convdiff coefficients: {s2}",
    ]
    assert verdict(capsys, 10, ok, "inverse problem", details)


def test_criterion_11_property_suites(capsys, convdiff, ricci):
    import test_properties as tp
    import test_similarity as ts

    ran, failed = [], []
    suites = [
        ("parser round-trip (500)", tp.test_parser_round_trip, {}),
        ("derivative vs finite difference (50)", tp.test_derivative_matches_finite_difference, {}),
        ("normalize idempotence", tp.test_normalize_idempotent, {}),
        ("jacobi ricci", tp.test_jacobi_identity, {"name": "ricci"}),
        ("jacobi convdiff", tp.test_jacobi_identity, {"name": "convdiff"}),
        ("adjoint bracket preservation ricci", tp.test_adjoint_preserves_brackets, {"name": "ricci"}),
        ("adjoint bracket preservation convdiff", tp.test_adjoint_preserves_brackets, {"name": "convdiff"}),
        ("reduction round trip (rotation)", ts.test_reduction_round_trip_rotation, {"convdiff": convdiff}),
        ("reduction round trip (translation)", ts.test_reduction_round_trip_translation, {"convdiff": convdiff}),
        ("x <-> y symmetry", ts.test_swap_symmetry, {"ricci": ricci}),
    ]
    for name, fn, kw in suites:
        try:
            fn(**kw)
            ran.append(name)
        except Exception as exc:  # report and continue so every suite is listed
            failed.append(f"{name}: {type(exc).__name__}")
    ok = not failed
    assert verdict(capsys, 11, ok, "property suites", [f"passed: {', '.join(ran)}"] + failed)
