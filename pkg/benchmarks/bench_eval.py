"""Compare the compiled and numpy evaluation backends.

    python benchmarks/bench_eval.py [--points N] [--repeat R]

Both backends run the same compiled program; the script checks that they
agree before timing them.
"""

import argparse
import timeit

import numpy as np

from liesym import evaluate
from liesym.parsing import ParseContext, parse

CASES = {
    "polynomial": "u*u_2x + u*u_2y - v*u_x - u_t + (x^2)*y - 3*t*x*y",
    "tanh profile": "-1/(2*y)*(r*t + 1)*(-1 + tanh(sqrt(a*r)*(2 - a*x + ln(y))/(2*a))^2)",
    "rational": "(2*v*t*x - x^2 - y^2 - v^2*t^2 + 2)/(4*t + 3)",
}


def bench(text, points, repeat, rng):
    e = parse(text, ParseContext(params=frozenset({"v", "a", "r"})))
    prog = evaluate.compile_expr(e)
    vals = rng.uniform(0.5, 2.0, size=(len(prog.variables), points))
    out = {}
    ref = evaluate.run(prog, vals, "numpy")
    for backend in ("numpy", "cython"):
        if backend == "cython" and evaluate._evalkernel is None:
            continue
        got = evaluate.run(prog, vals, backend)
        scale = np.nanmax(np.abs(ref))
        assert np.allclose(got, ref, rtol=1e-12, atol=1e-12 * scale, equal_nan=True), backend
        t = min(timeit.repeat(lambda: evaluate.run(prog, vals, backend), number=1, repeat=repeat))
        out[backend] = t
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if evaluate._evalkernel is None:
        print("compiled kernel not built; timing the numpy backend only")
    print(f"{'case':<14} {'points':>7} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for points in sorted({args.points, 10 * args.points}):
        for name, text in CASES.items():
            r = bench(text, points, args.repeat, rng)
            cy = r.get("cython")
            sp = f"{r['numpy'] / cy:8.1f}" if cy else "       -"
            cys = f"{1e3 * cy:10.3f}" if cy else "         -"
            print(f"{name:<14} {points:>7} {1e3 * r['numpy']:10.3f} {cys} {sp}")


if __name__ == "__main__":
    main()
