"""Compare the numba kernels against their numpy references.

    python benchmarks/bench_kernels.py            # kernel timings
    python benchmarks/bench_kernels.py --e2e      # plus a training run with and without numba

The end-to-end comparison runs the same job in two subprocesses, one with
CFN_DISABLE_NUMBA=1, so the flag is read at import time as in normal use.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from cfn import _kernels


def _time(fn, repeat=5):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_table(sizes):
    rng = np.random.default_rng(0)
    rows = []
    for n in sizes:
        p = rng.normal(size=n)
        coeffs = rng.normal(size=4)
        X = rng.normal(size=(n, 8))
        c = rng.normal(size=8)
        scores = np.round(rng.normal(size=n), 2)
        cases = {
            "horner": (lambda: _kernels.horner_py(coeffs, p), lambda: _kernels.horner_jit(coeffs, p)),
            "sqdist": (lambda: _kernels.sqdist_py(X, c), lambda: _kernels.sqdist_jit(X, c)),
            "midranks": (lambda: _kernels.midranks_py(scores), lambda: _kernels.midranks_jit(scores)),
        }
        for name, (py, jit) in cases.items():
            jit()  # compile outside the timing
            t_py, t_jit = _time(py), _time(jit)
            rows.append((name, n, t_py, t_jit))
    return rows


E2E_SNIPPET = """
import time
from cfn.data import gen_spiral
from cfn.pipeline import run
ds = gen_spiral(300, seed=0)
run(ds, "spiral", seed=0, epochs=5)
t = time.perf_counter()
out = run(ds, "spiral", seed=0, epochs=300)
print(time.perf_counter() - t, out.metrics["accuracy"])
"""


def end_to_end():
    results = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, CFN_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", E2E_SNIPPET], env=env, capture_output=True, text=True,
                             check=True)
        seconds, acc = out.stdout.split()
        results[label] = (float(seconds), float(acc))
    return results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 10_000, 1_000_000])
    ap.add_argument("--e2e", action="store_true", help="also time a spiral training run")
    args = ap.parse_args(argv)
    if not _kernels.NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy path exists")
        return 1
    print(f"{'kernel':<10}{'n':>10}{'numpy (us)':>14}{'numba (us)':>14}{'speedup':>10}")
    for name, n, t_py, t_jit in kernel_table(args.sizes):
        print(f"{name:<10}{n:>10}{t_py * 1e6:>14.1f}{t_jit * 1e6:>14.1f}{t_py / t_jit:>10.2f}")
    if args.e2e:
        res = end_to_end()
        for label, (sec, acc) in res.items():
            print(f"spiral 300 epochs, {label}: {sec:.2f}s, accuracy {acc:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
