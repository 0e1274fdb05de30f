"""Time the compiled and numpy kernel backends on random premise structures.

Usage: python3 benchmarks/bench_kernels.py [--rows N] [--rules R] [--repeat K]
"""
import argparse
import timeit

import numpy as np

from tsfuzzy.inference import compile_premises
from tsfuzzy.kernels import MATCHING, MOVING, get_backend
from tsfuzzy.membership import MembershipFunction as MF


def random_premises(rng, n_rules, m):
    premises = []
    for _ in range(n_rules):
        clauses = []
        for v in rng.choice(m, size=min(2, m), replace=False):
            a, b, c, d = np.sort(rng.uniform(-0.2, 1.2, 4))
            kind = rng.integers(3)
            mf = MF.z(a, d) if kind == 0 else MF.s(a, d) if kind == 1 else MF.trap(a, b, c, d)
            clauses.append((int(v), mf))
        premises.append(tuple(clauses))
    return premises


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=20000)
    p.add_argument("--rules", type=int, default=8)
    p.add_argument("--inputs", type=int, default=4)
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args()

    rng = np.random.default_rng(0)
    X = rng.uniform(0, 1, (args.rows, args.inputs))
    compiled = compile_premises(random_premises(rng, args.rules, args.inputs))
    mask = np.ones((args.rules, args.inputs + 1), dtype=bool)

    backends = {}
    for name in ("python", "cython"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print(f"{name}: not available")

    print(f"{args.rows} rows, {args.rules} rules, {args.inputs} inputs, best of {args.repeat}")
    timings = {}
    for name, k in backends.items():
        for label, mode in (("weights/moving", MOVING), ("weights/matching", MATCHING)):
            t = min(timeit.repeat(lambda: k.rule_weights(X, *compiled, args.rules, mode),
                                  number=1, repeat=args.repeat))
            timings[name, label] = t
        W = k.rule_weights(X, *compiled, args.rules, MOVING)
        timings[name, "regressors"] = min(timeit.repeat(lambda: k.regressor_matrix(W, X, mask),
                                                        number=1, repeat=args.repeat))
    for label in ("weights/moving", "weights/matching", "regressors"):
        row = "  ".join(f"{n}={timings[n, label] * 1e3:8.3f} ms" for n in backends)
        if len(backends) == 2:
            row += f"  speedup={timings['python', label] / timings['cython', label]:5.1f}x"
        print(f"{label:<17} {row}")

    if len(backends) == 2:
        for mode in (MOVING, MATCHING):
            a = backends["python"].rule_weights(X, *compiled, args.rules, mode)
            b = backends["cython"].rule_weights(X, *compiled, args.rules, mode)
            print(f"max |python - cython| weights (mode {mode}): {np.max(np.abs(a - b)):.2e}")


if __name__ == "__main__":
    main()
