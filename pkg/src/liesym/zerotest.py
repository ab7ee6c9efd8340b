"""Zero testing: exact cancellation first, random sampling as a fallback."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from liesym.evaluate import compile_expr, run
from liesym.expr import ZERO, Expr, FuncDeriv, Jet, Rational, Symbol
from liesym.normal import _mono_expr, normalizer, poly_to_expr

DEFAULT_POINTS = 12
DEFAULT_TOL = 1e-9


def default_tol() -> float:
    env = os.environ.get("LIESYM_TOL")
    return float(env) if env else DEFAULT_TOL


class Indeterminate(ArithmeticError):
    """Every sample point hit a pole or left the real domain."""


@dataclass
class ZeroResult:
    zero: bool
    certificate: str | None  # "exact", "sampled" or None
    witness: dict | None = None  # atom name -> value, for a nonzero verdict
    residual: float = 0.0
    samples: int = 0
    normal_form: Expr = field(default=ZERO, repr=False)

    def __bool__(self):
        return self.zero


def _is_positive_atom(a: Expr, positive: frozenset) -> bool:
    if isinstance(a, Symbol):
        return a.name in positive
    if isinstance(a, Jet):
        return a.order == 0 and a.root in positive
    return False


def sample_points(atoms, positive: frozenset, n: int, rng) -> np.ndarray:
    """Random rationals with magnitude in [1/4, 4]; positive atoms stay positive."""
    out = np.empty((len(atoms), n))
    for i, a in enumerate(atoms):
        mag = rng.integers(16, 257, size=n) / 64.0  # k/64 in [1/4, 4]
        if _is_positive_atom(a, positive):
            out[i] = mag
        else:
            out[i] = mag * rng.choice((-1.0, 1.0), size=n)
    return out


def is_zero(
    e: Expr,
    positive: Iterable[str] = (),
    *,
    points: int = DEFAULT_POINTS,
    tol: float | None = None,
    seed: int = 0,
) -> ZeroResult:
    """Decide whether ``e`` vanishes identically.

    Returns a :class:`ZeroResult`; raises :class:`Indeterminate` if no sample
    point lies in the domain.
    """
    positive = frozenset(positive)
    tol = default_tol() if tol is None else tol
    nz = normalizer(positive)
    rf = nz.reduce(nz.nf(e))
    nf_expr = nz.normalize(e)
    if rf.num.is_zero():
        return ZeroResult(True, "exact", normal_form=ZERO)
    terms = [_mono_expr(m, c) for m, c in rf.num.terms.items()]
    dens = [poly_to_expr(f) for f in rf.den]
    atoms = sorted(set().union(*(t.free_atoms for t in terms + dens)), key=lambda a: a.sort_key)
    if not atoms:
        # a nonzero constant
        v = float(sum(rf.num.terms.values()))
        return ZeroResult(False, None, witness={}, residual=v, normal_form=nf_expr)
    progs = [compile_expr(t, tuple(atoms)) for t in terms]
    dprogs = [compile_expr(d, tuple(atoms)) for d in dens]
    rng = np.random.default_rng(seed)
    good = 0
    tried = 0
    while good < points and tried < points * 8:
        batch = max(points - good, 4) * 2
        vals = sample_points(atoms, positive, batch, rng)
        tried += batch
        tv = np.array([run(p, vals) for p in progs])
        ok = np.all(np.isfinite(tv), axis=0)
        for dp in dprogs:
            dv = run(dp, vals)
            ok &= np.isfinite(dv) & (np.abs(dv) > 1e-300)
        total = tv.sum(axis=0)
        scale = np.abs(tv).sum(axis=0)
        for j in np.nonzero(ok)[0][: points - good]:
            good += 1
            if abs(total[j]) > tol * scale[j]:
                from liesym.parsing import to_string

                witness = {to_string(a): float(vals[i, j]) for i, a in enumerate(atoms)}
                rel = abs(total[j]) / scale[j]
                return ZeroResult(False, None, witness, float(rel), good, nf_expr)
    if good == 0:
        raise Indeterminate("every sample point hit a pole or a domain violation")
    return ZeroResult(True, "sampled", samples=good, normal_form=nf_expr)
