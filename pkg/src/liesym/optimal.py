"""Optimal systems of one-dimensional subalgebras.

An algebra file names a basis (one section per generator), the case logic
used to bring a coefficient vector to normal form, and the list of
representatives.  Reductions are always re-verified by applying the returned
adjoint maps; the case logic itself is never trusted.
"""

from __future__ import annotations

import configparser
import itertools
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from liesym.algebra import AdjointMap, LieAlgebra, adjoint, format_combination, structure_table
from liesym.evaluate import evaluate
from liesym.expr import Expr, Rational, Symbol
from liesym.parsing import ParseContext, parse
from liesym.prolong import VectorField

ALGEBRAS = ("ricci", "convdiff")


class NoCaseMatched(ValueError):
    pass


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class Representative:
    coeffs: tuple  # Exprs over the family parameters
    params: tuple = ()

    @property
    def free(self) -> tuple:
        names = set()
        for c in self.coeffs:
            names |= {a.name for a in c.free_atoms if isinstance(a, Symbol)}
        return tuple(p for p in self.params if p in names)

    def vector(self, values: dict | None = None) -> np.ndarray:
        values = values or {}
        return np.array([evaluate(c, {Symbol(k): v for k, v in values.items()}) for c in self.coeffs], dtype=float)

    def match(self, vec, tol: float) -> dict | None:
        """Parameter values making this family equal ``vec``, or None.

        Each coefficient is a constant or a bare parameter.
        """
        values: dict = {}
        for c, x in zip(self.coeffs, vec):
            if isinstance(c, Symbol):
                if c.name in values and abs(values[c.name] - x) > tol:
                    return None
                values[c.name] = float(x)
            elif isinstance(c, Rational):
                if abs(float(c.value) - x) > tol:
                    return None
            else:
                raise CatalogError("representative coefficients must be constants or bare parameters")
        return values

    def label(self, names: Sequence[str]) -> str:
        from liesym.parsing import to_string

        parts = []
        for c, nm in zip(self.coeffs, names):
            if c == Rational(0):
                continue
            s = to_string(c)
            parts.append(nm if s == "1" else f"{s}*{nm}")
        return " + ".join(parts) if parts else "0"


@dataclass
class OptimalSystem:
    representatives: list
    params: tuple = ()

    def labels(self, names) -> list:
        return [r.label(names) for r in self.representatives]

    def without(self, index: int) -> "OptimalSystem":
        reps = [r for i, r in enumerate(self.representatives) if i != index]
        return OptimalSystem(reps, self.params)


@dataclass
class AlgebraSpec:
    name: str
    model: str
    algebra: LieAlgebra
    system: OptimalSystem
    cases: str = ""
    params: tuple = ()


def _parse_reps(text: str, params: tuple) -> list:
    ctx = ParseContext(params=frozenset(params))
    reps = []
    for line in text.strip().splitlines():
        line = line.strip()
        if not line:
            continue
        coeffs = tuple(parse(p.strip(), ctx) for p in line.split(","))
        reps.append(Representative(coeffs, params))
    return reps


def algebra_from_ini(text: str, source: str = "<string>") -> AlgebraSpec:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise CatalogError(f"{source}: {exc}") from None
    if not cp.has_section("algebra"):
        raise CatalogError(f"{source}: missing [algebra] section")
    head = cp["algebra"]
    params = tuple(head.get("params", "").replace(",", " ").split())
    ctx = ParseContext(params=frozenset(params))
    names = sorted((s for s in cp.sections() if s.startswith("V")), key=lambda s: int(s[1:]))
    basis = []
    for nm in names:
        sec = cp[nm]
        basis.append(VectorField.parse(*(sec.get(k, "0") for k in ("tau", "xi", "eta", "phi")), ctx=ctx))
    alg = structure_table(basis, names, params)
    reps: list = []
    rep_params: tuple = ()
    if cp.has_section("optimal"):
        rep_params = tuple(cp["optimal"].get("params", "").split())
        reps = _parse_reps(cp["optimal"].get("reps", ""), rep_params)
        for r in reps:
            if len(r.coeffs) != len(basis):
                raise CatalogError(f"{source}: representative has {len(r.coeffs)} coefficients, basis has {len(basis)}")
    return AlgebraSpec(
        head.get("name", Path(source).stem.replace("-algebra", "")),
        head.get("model", ""),
        alg,
        OptimalSystem(reps, rep_params),
        head.get("cases", ""),
        params,
    )


_spec_cache: dict = {}


def load_algebra(name: str) -> AlgebraSpec:
    """A builtin algebra (``ricci``, ``convdiff``) or an algebra file path."""
    if name in _spec_cache:
        return _spec_cache[name]
    if name in ALGEBRAS:
        text = resources.files("liesym").joinpath("catalog", f"{name}-algebra.ini").read_text()
        spec = algebra_from_ini(text, f"{name}-algebra.ini")
    else:
        p = Path(name)
        if not p.exists():
            raise CatalogError(f"unknown algebra {name!r} (builtins: {', '.join(ALGEBRAS)})")
        spec = algebra_from_ini(p.read_text(), str(p))
    _spec_cache[name] = spec
    return spec


def system_from_text(text: str, params: tuple = ("alpha", "beta")) -> OptimalSystem:
    """Representative list, one comma-separated coefficient row per line."""
    return OptimalSystem(_parse_reps(text, params), params)


# --------------------------------------------------------------------------
# case logic: (normalized vector) -> (list of (generator index, eps), scale, notes)


def _nz(x: float, ref: float) -> bool:
    return abs(x) > 1e-12 * max(1.0, ref)


def _ricci_cases(a: np.ndarray, mode: str) -> tuple:
    ref = float(np.abs(a).max())
    a1, a2, a3, a4 = a
    if _nz(a1, ref):
        s = 1 / a1
        b = a * s
        maps = [(1, b[1])] if _nz(b[1], ref) else []
        if _nz(b[2], ref):
            maps.append((3, b[3] / b[2]))
        elif _nz(b[3], ref):
            raise NoCaseMatched("a1 != 0, a3 = 0, a4 != 0: the V4 coefficient cannot be removed by Ad(exp((a4/a3) V4))")
        return maps, s, []
    if _nz(a2, ref):
        s = 1 / a2
        b = a * s
        if _nz(b[2], ref):
            return [(3, b[3] / b[2])], s, []
        if _nz(b[3], ref):
            raise NoCaseMatched("a1 = 0, a2 != 0, a3 = 0, a4 != 0: the V4 coefficient cannot be removed by Ad(exp((a4/a3) V4))")
        return [], s, []
    if _nz(a3, ref):
        s = 1 / a3
        b = a * s
        return ([(3, b[3])] if _nz(b[3], ref) else []), s, []
    if _nz(a4, ref):
        return [], 1 / a4, []
    raise NoCaseMatched("zero vector")


def quadratic_eps(b4: float) -> float:
    """Root nearest zero of ``(b4/2) e^2 + e - b4 = 0``."""
    if b4 == 0:
        return 0.0
    return (-1 + math.sqrt(1 + 2 * b4 * b4)) / b4


def _convdiff_cases(a: np.ndarray, mode: str) -> tuple:
    ref = float(np.abs(a).max())
    b1, b2, b3, b4 = a
    if _nz(b1, ref):
        s = 1 / b1
        b = a * s
        return ([(2, 2 * b[2])] if _nz(b[2], ref) else []), s, []
    if _nz(b2, ref):
        s = 1 / b2
        b = a * s
        maps = []
        if _nz(b[2], ref):
            maps.append((3, b[2]))
        if _nz(b[3], ref):
            maps.append((2, -b[3]))
        return maps, s, []
    if _nz(b3, ref):
        s = 1 / b3
        c4 = b4 * s
        notes = []
        if not _nz(c4, ref):
            return [], s, notes
        if mode == "quadratic":
            eps = quadratic_eps(c4)
        else:
            eps = math.atan(c4)
            notes.append(f"rotation angle arctan({c4:.6g}) = {eps:.6g}; truncated quadratic root {quadratic_eps(c4):.6g}")
        # the rotation leaves V3 with coefficient cos(eps) + c4 sin(eps)
        lead = math.cos(eps) + c4 * math.sin(eps)
        return [(1, eps)], s / lead, notes
    if _nz(b4, ref):
        # V4 rotates onto V3 under Ad(exp((pi/2) V2))
        return [(1, math.pi / 2)], 1 / b4, ["b1 = b2 = b3 = 0: V4 rotated onto V3"]
    raise NoCaseMatched("zero vector")


CASES: dict = {"ricci": _ricci_cases, "convdiff": _convdiff_cases}


@dataclass
class Reduction:
    index: int | None  # representative index in the system, None when unreached
    values: dict  # representative parameter values
    maps: list  # AdjointMaps in application order
    scale: float
    image: np.ndarray  # scale * (maps applied to a)
    error: float  # distance from image to the representative vector
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.index is not None


def apply_maps(maps: Sequence[AdjointMap], a) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    for m in maps:
        out = m.apply(out)
    return out


def match_representative(system: OptimalSystem, vec, tol: float) -> tuple:
    for i, r in enumerate(system.representatives):
        vals = r.match(vec, tol)
        if vals is not None:
            return i, vals
    return None, {}


def reduce_to_representative(spec: AlgebraSpec, a, system: OptimalSystem | None = None, *, mode: str = "exact", tol: float = 1e-10) -> Reduction:
    """Carry ``a`` to a representative of ``system`` by adjoint maps and scaling.

    ``mode`` selects the rotation angle in the convdiff ``V3 + b4 V4`` branch:
    ``exact`` (arctan) or ``quadratic`` (the second-order truncation).  Raises
    :class:`NoCaseMatched` when the case logic has no branch for ``a``.
    """
    system = system or spec.system
    a = np.asarray(a, dtype=float)
    if not np.any(a):
        raise ValueError("zero coefficient vector")
    cases = CASES.get(spec.cases)
    if cases is None:
        return reduce_numeric(spec, a, system, tol=tol)
    steps, scale, notes = cases(a, mode)
    maps = [adjoint(spec.algebra, i, eps) for i, eps in steps]
    image = scale * apply_maps(maps, a)
    idx, vals = match_representative(system, image, tol * max(1.0, float(np.abs(image).max())))
    err = float(np.abs(image - system.representatives[idx].vector(vals)).max()) if idx is not None else float("nan")
    if idx is None:
        notes = notes + [f"image {np.array2string(image, precision=6)} matches no representative"]
    return Reduction(idx, vals, maps, scale, image, err, notes)


def _orbit_residual(spec: AlgebraSpec, a, target: Callable, nparams: int, rounds: int):
    n = spec.algebra.dim
    a = np.asarray(a, dtype=float)

    def resid(theta):
        eps = theta[: n * rounds]
        s = theta[n * rounds]
        p = theta[n * rounds + 1 :]
        maps = [adjoint(spec.algebra, k % n, eps[k]) for k in range(n * rounds)]
        return s * apply_maps(maps, a) - target(p)

    return resid


def reduce_numeric(spec: AlgebraSpec, a, system: OptimalSystem | None = None, *, tol: float = 1e-10, starts: int = 8, seed: int = 0) -> Reduction:
    """Generic fallback: least-squares search over adjoint parameters, scale and
    family parameters, one representative at a time."""
    system = system or spec.system
    rng = np.random.default_rng(seed)
    n = spec.algebra.dim
    a = np.asarray(a, dtype=float)
    best = None
    for idx, r in enumerate(system.representatives):
        free = r.free

        def target(p, r=r, free=free):
            return r.vector(dict(zip(free, p)))

        f = _orbit_residual(spec, a, target, len(free), 2)
        for _ in range(starts):
            x0 = np.concatenate([rng.normal(0, 0.5, 2 * n), [1 / float(np.abs(a).max())], rng.normal(0, 1, len(free))])
            try:
                sol = least_squares(f, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
            except (ValueError, OverflowError, FloatingPointError):
                continue
            err = float(np.abs(sol.fun).max())
            if best is None or err < best[0]:
                best = (err, idx, sol.x, free)
            if err <= tol:
                break
        if best is not None and best[0] <= tol:
            break
    if best is None or best[0] > tol:
        return Reduction(None, {}, [], float("nan"), a, best[0] if best else float("nan"), ["numeric search found no representative"])
    err, idx, x, free = best
    maps = [adjoint(spec.algebra, k % n, x[k]) for k in range(2 * n)]
    scale = float(x[2 * n])
    image = scale * apply_maps(maps, a)
    return Reduction(idx, dict(zip(free, x[2 * n + 1 :])), maps, scale, image, err, ["numeric reduction"])


# --------------------------------------------------------------------------
# orbit invariants and separation


def coordinate_ideals(alg: LieAlgebra) -> list:
    """Proper nonzero ideals spanned by subsets of the basis."""
    n = alg.dim
    out = []
    for k in range(1, n):
        for sub in itertools.combinations(range(n), k):
            s = set(sub)
            if all(not alg.c[i][j][m] for i in range(n) for j in sub for m in range(n) if m not in s):
                out.append(sub)
    return out


def signature(alg: LieAlgebra, a, digits: int = 9) -> dict:
    """Orbit invariants of the line through ``a``.

    Ideal membership, the rank of ad, and the eigenvalue type of ad (counts of
    zero, real and complex eigenvalues) are unchanged by adjoint maps and by
    rescaling.
    """
    a = np.asarray(a, dtype=float)
    tol = 10.0 ** (-digits) * max(1.0, float(np.abs(a).max()))
    member = tuple(bool(np.all(np.abs(np.delete(a, list(sub))) <= tol)) for sub in coordinate_ideals(alg))
    ad = alg.ad_of(a)
    rank = int(np.linalg.matrix_rank(ad, tol=tol))
    ev = np.linalg.eigvals(ad)
    zero = int(np.sum(np.abs(ev) <= 1e-8))
    cplx = int(np.sum(np.abs(ev.imag) > 1e-8))
    return {"ideals": member, "ad_rank": rank, "eigen_type": (zero, len(ev) - zero - cplx, cplx)}


def _family_samples(r: Representative, rng, k: int = 6) -> list:
    free = r.free
    pts = [dict.fromkeys(free, 0.0)] if free else [{}]
    for _ in range(k if free else 0):
        pts.append({p: float(rng.normal(0, 2)) for p in free})
    return pts


@dataclass
class OptimalReport:
    algebra: str
    trials: int
    reached: int
    failures: list  # (vector, message)
    max_error: float
    separation: list  # (i, j, certified, distinguishing invariants)
    counts: dict  # representative label -> hits
    essentiality: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.reached == self.trials and self.max_error <= 1e-10 and all(c for _, _, c, _ in self.separation)

    def to_dict(self) -> dict:
        return {
            "algebra": self.algebra,
            "trials": self.trials,
            "reached": self.reached,
            "max_error": self.max_error,
            "failures": [{"vector": [float(x) for x in v], "message": m} for v, m in self.failures[:20]],
            "counts": self.counts,
            "separation": [{"pair": [i, j], "certified": c, "by": by} for i, j, c, by in self.separation],
            "essentiality": self.essentiality,
        }


def random_vectors(n: int, trials: int, seed: int, pattern: str = "generic") -> list:
    """``generic`` vectors have every entry nonzero; ``sparse`` vectors draw a
    random nonempty zero pattern first, so every branch of the case logic gets
    exercised."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        v = rng.normal(0, 1, n)
        if pattern == "sparse":
            mask = np.zeros(n, dtype=bool)
            while not mask.any():
                mask = rng.random(n) < 0.5
            v = np.where(mask, v, 0.0)
        out.append(v)
    return out


def separation(spec: AlgebraSpec, system: OptimalSystem, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    reps = system.representatives
    sigs = [[signature(spec.algebra, r.vector(p)) for p in _family_samples(r, rng)] for r in reps]
    out = []
    for i, j in itertools.combinations(range(len(reps)), 2):
        by = set()
        certified = True
        for si in sigs[i]:
            for sj in sigs[j]:
                diff = [k for k in si if si[k] != sj[k]]
                if not diff:
                    certified = False
                by.update(diff)
        out.append((i, j, certified, sorted(by)))
    return out


def verify_optimal(spec: AlgebraSpec, system: OptimalSystem | None = None, trials: int = 1000, seed: int = 0, pattern: str = "generic", tol: float = 1e-10) -> OptimalReport:
    system = system or spec.system
    labels = system.labels(spec.algebra.names)
    counts = dict.fromkeys(labels, 0)
    failures = []
    reached = 0
    max_err = 0.0
    for a in random_vectors(spec.algebra.dim, trials, seed, pattern):
        try:
            red = reduce_to_representative(spec, a, system, tol=tol)
        except NoCaseMatched as exc:
            failures.append((a, f"no case matched: {exc}"))
            continue
        if not red.ok or red.error > tol:
            failures.append((a, "; ".join(red.notes) or f"reconstruction error {red.error:.3g}"))
            continue
        reached += 1
        max_err = max(max_err, red.error)
        counts[labels[red.index]] += 1
    return OptimalReport(spec.name, trials, reached, failures, max_err, separation(spec, system, seed), counts)


def essentiality(spec: AlgebraSpec, system: OptimalSystem | None = None, seed: int = 0, tol: float = 1e-9) -> list:
    """Whether each family parameter can be changed by an adjoint map.

    For each free parameter two values are drawn (same sign) and a least-squares
    search looks for a group element and a scale carrying one family member to
    the other.  A parameter is reported inessential when the search succeeds.
    """
    system = system or spec.system
    rng = np.random.default_rng(seed)
    n = spec.algebra.dim
    out = []
    for idx, r in enumerate(system.representatives):
        for p in r.free:
            base = {q: float(rng.uniform(0.5, 2)) for q in r.free}
            other = dict(base)
            other[p] = base[p] + float(rng.uniform(0.5, 1.5))
            src, dst = r.vector(base), r.vector(other)
            f = _orbit_residual(spec, src, lambda _p, dst=dst: dst, 0, 2)
            best = float("inf")
            for _ in range(12):
                x0 = np.concatenate([rng.normal(0, 1, 2 * n), [1.0]])
                try:
                    sol = least_squares(f, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=3000)
                except (ValueError, OverflowError, FloatingPointError):
                    continue
                best = min(best, float(np.abs(sol.fun).max()))
                if best <= tol:
                    break
            out.append(
                {
                    "representative": r.label(spec.algebra.names),
                    "parameter": p,
                    "from": base[p],
                    "to": other[p],
                    "residual": best,
                    "essential": best > tol,
                }
            )
    return out
