"""Numeric evaluation of expressions over batches of points.

Expressions compile to a flat postfix program.  The program runs either in
the compiled ``_evalkernel`` extension (one C stack per point) or in a numpy
interpreter that evaluates every instruction across the whole batch.  The
backend is chosen at import; ``LIESYM_BACKEND=numpy`` forces the fallback.
NaN and infinities mark domain violations (poles, logs of negatives, ...).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from liesym.expr import Expr, Func, FuncDeriv, Jet, Power, Product, Rational, Sum, Symbol

CONST, VAR, ADD, MUL, POW, FUNC = range(6)
FUNC_CODES = {"exp": 0, "ln": 1, "sqrt": 2, "sin": 3, "cos": 4, "tanh": 5, "arctan": 6}

try:
    if os.environ.get("LIESYM_BACKEND") == "numpy":
        raise ImportError
    from liesym import _evalkernel
except ImportError:  # pragma: no cover - depends on the build
    _evalkernel = None

BACKEND = "cython" if _evalkernel is not None else "numpy"


@dataclass(frozen=True)
class Program:
    code: np.ndarray  # int64 pairs (op, arg)
    consts: np.ndarray
    variables: tuple  # atoms in VAR index order
    max_stack: int


def compile_expr(e: Expr, variables: tuple | None = None) -> Program:
    atoms = sorted(e.free_atoms, key=lambda a: a.sort_key)
    if variables is None:
        variables = tuple(atoms)
    else:
        variables = tuple(variables)
        missing = set(atoms) - set(variables)
        if missing:
            raise KeyError(f"no value for {sorted(map(str, missing))}")
    index = {v: i for i, v in enumerate(variables)}
    code: list = []
    consts: list = []
    cindex: dict = {}
    depth = [0, 0]  # current, max

    def push(n=1):
        depth[0] += n
        depth[1] = max(depth[1], depth[0])

    def emit(node: Expr):
        if isinstance(node, Rational):
            v = float(node.value)
            k = cindex.get(v)
            if k is None:
                k = cindex[v] = len(consts)
                consts.append(v)
            code.extend((CONST, k))
            push()
        elif isinstance(node, (Symbol, Jet, FuncDeriv)):
            code.extend((VAR, index[node]))
            push()
        elif isinstance(node, (Sum, Product)):
            parts = node.terms if isinstance(node, Sum) else node.factors
            for c in parts:
                emit(c)
            code.extend((ADD if isinstance(node, Sum) else MUL, len(parts)))
            depth[0] -= len(parts) - 1
        elif isinstance(node, Power):
            emit(node.base)
            emit(node.exponent)
            code.extend((POW, 0))
            depth[0] -= 1
        elif isinstance(node, Func):
            emit(node.arg)
            code.extend((FUNC, FUNC_CODES[node.kind]))
        else:  # pragma: no cover
            raise TypeError(f"cannot compile {node!r}")

    emit(e)
    return Program(
        np.asarray(code, dtype=np.int64),
        np.asarray(consts, dtype=np.float64),
        variables,
        depth[1],
    )


_UNARY = {
    0: np.exp,
    1: lambda a: np.log(np.where(a > 0, a, np.nan)),
    2: lambda a: np.sqrt(np.where(a >= 0, a, np.nan)),
    3: np.sin,
    4: np.cos,
    5: np.tanh,
    6: np.arctan,
}


def _run_numpy(prog: Program, values: np.ndarray) -> np.ndarray:
    npts = values.shape[1]
    stack: list = []
    code = prog.code
    with np.errstate(all="ignore"):
        for pc in range(0, len(code), 2):
            op, arg = int(code[pc]), int(code[pc + 1])
            if op == CONST:
                stack.append(np.full(npts, prog.consts[arg]))
            elif op == VAR:
                stack.append(values[arg])
            elif op == ADD:
                parts = stack[-arg:]
                del stack[-arg:]
                acc = parts[0].copy()
                for p in parts[1:]:
                    acc += p
                stack.append(acc)
            elif op == MUL:
                parts = stack[-arg:]
                del stack[-arg:]
                acc = parts[0].copy()
                for p in parts[1:]:
                    acc *= p
                stack.append(acc)
            elif op == POW:
                ex = stack.pop()
                b = stack.pop()
                stack.append(np.power(b, ex))
            else:
                stack.append(_UNARY[arg](stack.pop()))
    return np.asarray(stack[0], dtype=np.float64)


def run(prog: Program, values: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Evaluate ``prog``; ``values`` has shape ``(len(prog.variables), npts)``."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != len(prog.variables):
        raise ValueError("values must have one row per program variable")
    backend = backend or BACKEND
    if backend == "cython":
        if _evalkernel is None:
            raise RuntimeError("compiled kernel not available")
        out = np.empty(values.shape[1])
        _evalkernel.run(prog.code, prog.consts, values, out, prog.max_stack)
        return out
    return _run_numpy(prog, values)


def _key(atom) -> Expr:
    if isinstance(atom, Expr):
        return atom
    from liesym.parsing import DEFAULT_CONTEXT, _Parser

    return _Parser(atom, DEFAULT_CONTEXT).parse()


def evaluate(e: Expr, point: Mapping, backend: str | None = None):
    """Evaluate ``e`` at one point or a batch.

    ``point`` maps atoms (or their printed names, e.g. ``"u_x"``) to scalars or
    equal-length arrays.  Returns a float or an array.
    """
    vals = {_key(k): v for k, v in point.items()}
    prog = compile_expr(e, tuple(vals))
    arrays = [np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in vals.values()]
    n = max((a.shape[0] for a in arrays), default=1)
    mat = np.empty((len(arrays), n))
    for i, a in enumerate(arrays):
        mat[i] = a if a.shape[0] == n else np.broadcast_to(a, (n,))
    out = run(prog, mat, backend)
    scalar = all(np.ndim(v) == 0 for v in vals.values())
    return float(out[0]) if scalar else out
