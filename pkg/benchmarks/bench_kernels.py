#!/usr/bin/env python3
"""Benchmark the compiled shuffle kernel against the pure-Python fallback.

Two views:

* raw ``shuffle_terms`` calls on identical random term dictionaries,
  cold (cache cleared per repetition) and warm (shared suffix cache);
* an end-to-end composition-group inverse, run in a subprocess per
  backend so the import-time selection (FLIESS_PURE) is exercised.

Results from both backends are compared for exact equality before any
timing is reported.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from fliess._kernels import _pure

try:
    from fliess._kernels import _fast
except ImportError:
    _fast = None


def random_terms(rng, letters, max_len, count):
    terms = {}
    while len(terms) < count:
        k = int(rng.integers(0, max_len + 1))
        w = tuple(int(x) for x in rng.integers(0, letters, size=k))
        terms[w] = float(rng.uniform(-1.0, 1.0))
    return terms


def time_shuffles(mod, pairs, degree, repeat, cold):
    best = float("inf")
    for _ in range(repeat):
        if cold:
            mod.clear_cache()
        t0 = time.perf_counter()
        for a, b in pairs:
            mod.shuffle_terms(a, b, degree)
        best = min(best, time.perf_counter() - t0)
    return best


GROUP_SNIPPET = """
import json, time
import numpy as np
from fliess import KERNEL_BACKEND
from fliess.composition import group_inverse
from fliess.series import Series, VectorSeries

rng = np.random.default_rng(0)
comps = []
for _ in range(2):
    terms = {}
    while len(terms) < 40:
        k = int(rng.integers(0, 7))
        w = tuple(int(x) for x in rng.integers(0, 3, size=k))
        terms[w] = float(rng.uniform(-1.0, 1.0))
    comps.append(Series(3, 8, terms))
v = VectorSeries(comps)
t0 = time.perf_counter()
e = group_inverse(v, 8)
dt = time.perf_counter() - t0
check = sum(c.max_abs_coeff() for c in e)
print(json.dumps({"backend": KERNEL_BACKEND, "seconds": dt, "check": check}))
"""


def run_group_inverse(force_pure):
    env = dict(os.environ)
    env.pop("FLIESS_PURE", None)
    if force_pure:
        env["FLIESS_PURE"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", GROUP_SNIPPET], env=env, capture_output=True, text=True
    )
    if out.returncode != 0:
        raise RuntimeError(out.stderr)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=30, help="random operand pairs")
    ap.add_argument("--terms", type=int, default=80, help="terms per operand")
    ap.add_argument("--degree", type=int, default=8, help="truncation degree")
    ap.add_argument("--repeat", type=int, default=5, help="repetitions, best-of")
    args = ap.parse_args()

    rng = np.random.default_rng(1234)
    pairs = [
        (random_terms(rng, 3, 6, args.terms), random_terms(rng, 3, 6, args.terms))
        for _ in range(args.pairs)
    ]

    if _fast is None:
        print("compiled kernel not available; timing pure backend only")
    else:
        for a, b in pairs[:5]:
            _fast.clear_cache()
            _pure.clear_cache()
            if _fast.shuffle_terms(a, b, args.degree) != _pure.shuffle_terms(a, b, args.degree):
                raise SystemExit("backend results differ; refusing to benchmark")
        print("parity check: identical results on sample pairs")

    print(
        f"\nshuffle_terms: {args.pairs} pairs x {args.terms} terms, "
        f"degree {args.degree}, best of {args.repeat}"
    )
    rows = []
    for cold in (True, False):
        label = "cold cache" if cold else "warm cache"
        tp = time_shuffles(_pure, pairs, args.degree, args.repeat, cold)
        if _fast is not None:
            tf = time_shuffles(_fast, pairs, args.degree, args.repeat, cold)
            rows.append((label, tf, tp, tp / tf))
        else:
            rows.append((label, None, tp, None))
    for label, tf, tp, speedup in rows:
        if tf is None:
            print(f"  {label:10s}  python {tp * 1e3:8.2f} ms")
        else:
            print(
                f"  {label:10s}  cython {tf * 1e3:8.2f} ms   "
                f"python {tp * 1e3:8.2f} ms   speedup {speedup:5.1f}x"
            )

    print("\ngroup_inverse: 2-component series, 40 terms each, degree 8")
    results = [run_group_inverse(force_pure=False), run_group_inverse(force_pure=True)]
    if abs(results[0]["check"] - results[1]["check"]) > 1e-12:
        raise SystemExit("backend results differ in group_inverse")
    for r in results:
        print(f"  {r['backend']:8s} {r['seconds'] * 1e3:8.2f} ms")
    if results[0]["backend"] != results[1]["backend"]:
        print(
            f"  speedup {results[1]['seconds'] / results[0]['seconds']:.1f}x "
            f"({results[0]['backend']} over {results[1]['backend']})"
        )


if __name__ == "__main__":
    main()
