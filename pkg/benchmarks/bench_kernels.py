"""Compiled vs pure-Python kernels.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Prints one
line per kernel with the best wall time of each backend, the speed-up and
the max difference between the two results (relative for dp5_linear).
"""

import argparse
import time

import numpy as np

from equiconv import _kernels_py, kernels
from equiconv.model import Coefficient, DifferentialExpression
from equiconv.solver.green import coefficient_callback


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def bench_scan(repeat, rows=64, cols=20000, seed=0):
    rng = np.random.default_rng(seed)
    a = np.exp(1j * rng.uniform(0, 2 * np.pi, (rows, cols))) * rng.uniform(0.9, 1.0, (rows, cols))
    b = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    a, b = np.ascontiguousarray(a), np.ascontiguousarray(b)
    return best_of(lambda: _kernels_py.linear_scan(a, b), repeat), best_of(lambda: kernels.linear_scan(a, b), repeat)


def bench_dp5(repeat, n_lam=32, rho=60.0):
    expr = DifferentialExpression(2, {0: Coefficient.step([0.0, 0.5, 1.0], [1.0, -2.0])})
    coeff = coefficient_callback(expr)
    lams = (rho * np.exp(1j * np.linspace(0, np.pi / 2, n_lam))) ** 2
    v0 = np.broadcast_to(np.eye(2, dtype=complex), (n_lam, 2, 2)).copy()

    def run(impl):
        return kernels.dp5_linear(lams, v0, 0.0, 1.0, [0.5], coeff, 1e-10, impl=impl)

    return best_of(lambda: run(_kernels_py), repeat), best_of(lambda: run(None), repeat)


def report(name, pure, fast, diff):
    (tp, _), (tf, _) = pure, fast
    print(f"{name:12s} pure {tp * 1e3:9.2f} ms  {kernels.BACKEND:6s} {tf * 1e3:9.2f} ms  "
          f"speed-up {tp / tf:6.1f}x  max diff {diff:.2e}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        print("compiled extension not built; both columns use the fallback")
    pure, fast = bench_scan(args.repeat)
    report("linear_scan", pure, fast, float(np.max(np.abs(pure[1] - fast[1]))))
    pure, fast = bench_dp5(args.repeat)
    xp, vp = pure[1]
    xf, vf = fast[1]
    end_p, end_f = np.asarray(vp[-1]), np.asarray(vf[-1])
    # solutions grow like exp(rho), so compare relative to the largest entry
    report("dp5_linear", pure, fast, float(np.max(np.abs(end_p - end_f)) / np.max(np.abs(end_p))))


if __name__ == "__main__":
    main()
