"""Evolution equations u_t = A u_xy + B u_x u_y + C u_2x + D u_2y + E u_y + F u_x + G."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from liesym.expr import ZERO, Expr, FuncDeriv, Jet, add, mul
from liesym.normal import normalize
from liesym.parsing import ParseContext, parse

LETTERS = ("A", "B", "C", "D", "E", "F", "G")
# jet multiplying each coefficient; G multiplies nothing
TERMS = {
    "A": (("x", "y"),),
    "B": (("x",), ("y",)),
    "C": (("x", "x"),),
    "D": (("y", "y"),),
    "E": (("y",),),
    "F": (("x",),),
    "G": (),
}
BUILTINS = ("ricci", "convdiff", "heat-power", "heat-exp")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class PdeModel:
    name: str
    coeffs: dict  # letter -> Expr in (x, y, t, u)
    params: tuple = ()
    positive: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "positive", frozenset(self.positive))
        full = {k: self.coeffs.get(k, ZERO) for k in LETTERS}
        for k, e in full.items():
            for a in e.free_atoms:
                if isinstance(a, Jet) and a.derivs:
                    raise ModelError(f"coefficient {k} contains the jet {a}")
        object.__setattr__(self, "coeffs", full)

    def __hash__(self):
        return hash((self.name, tuple(self.coeffs.values()), self.params, self.positive))

    @property
    def context(self) -> ParseContext:
        return ParseContext(params=frozenset(self.params), positive=self.positive)

    def term(self, letter: str) -> Expr:
        jets = [Jet("u", d) for d in TERMS[letter]]
        return mul(self.coeffs[letter], *jets)

    def rhs(self) -> Expr:
        return normalize(add(*(self.term(k) for k in LETTERS)), self.positive)

    def equation(self) -> Expr:
        """``u_t - rhs``, which vanishes on solutions."""
        return normalize(add(Jet("u", ("t",)), mul(-1, self.rhs())), self.positive)

    def with_coeffs(self, name: str | None = None, **coeffs) -> "PdeModel":
        new = dict(self.coeffs)
        new.update(coeffs)
        return PdeModel(name or self.name, new, self.params, self.positive)


def general_family(args: tuple = ("x", "y", "t", "u")) -> PdeModel:
    """The whole family with A..G unknown functions of ``args``."""
    return PdeModel("general", {k: FuncDeriv(k, args) for k in LETTERS})


def _split(s: str) -> list:
    return [p for p in s.replace(",", " ").split() if p]


def model_from_ini(text: str, source: str = "<string>") -> PdeModel:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep coefficient letters upper-case
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ModelError(f"{source}: {exc}") from None
    if not cp.has_section("model"):
        raise ModelError(f"{source}: missing [model] section")
    sec = cp["model"]
    params = _split(sec.get("params", ""))
    positive = _split(sec.get("positive", ""))
    ctx = ParseContext(params=frozenset(params), positive=frozenset(positive))
    unknown = set(sec) - {"name", "params", "positive", *LETTERS}
    if unknown:
        raise ModelError(f"{source}: unknown keys {sorted(unknown)}")
    coeffs = {}
    for k in LETTERS:
        if k in sec and sec[k].strip():
            coeffs[k] = parse(sec[k], ctx)
    return PdeModel(sec.get("name", Path(source).stem), coeffs, tuple(params), frozenset(positive))


def load_model(name: str) -> PdeModel:
    """A builtin model by name, or a catalog file by path."""
    if name in BUILTINS:
        text = resources.files("liesym").joinpath("catalog", f"{name}.ini").read_text()
        return model_from_ini(text, f"{name}.ini")
    p = Path(name)
    if not p.exists():
        raise ModelError(f"unknown model {name!r} (builtins: {', '.join(BUILTINS)})")
    return model_from_ini(p.read_text(), str(p))
