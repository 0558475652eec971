"""Compare the compiled and pure-Python slice-sweep kernels.

    python3 benchmarks/bench_kernels.py [--n 200] [--sweeps 200]

Times (a) a bare cMLG slice sweep over the W block and (b) full Gibbs
sweeps, once per available backend, and checks that both backends produce
the same chain from the same seed.
"""
import argparse
import time

import numpy as np

from mlgweibull import available_backends
from mlgweibull.mlg import slice_sweep_csc
from mlgweibull.model import gibbs_sweep, initial_state, w_whitened_conditional
from mlgweibull.simstudy import SimDesign, generate_dataset


def _best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(n, sweeps):
    design = SimDesign(n=n, k=0.5)
    data, truth = generate_dataset(design, np.random.default_rng(0))
    hyper = design.hyperparams()
    state = initial_state(data, hyper)
    params, _ = w_whitened_conditional(state, data, hyper)
    csc = params.csc
    lin = params.H.T @ params.alpha
    results = {}
    for backend in available_backends():
        def kernel():
            rng = np.random.default_rng(1)
            q = np.zeros(n)
            for _ in range(sweeps):
                q = slice_sweep_csc(csc, lin, params.log_rate, q, rng, backend=backend)

        def chain():
            rng = np.random.default_rng(1)
            s = state
            for _ in range(sweeps):
                s, _, _ = gibbs_sweep(s, data, hyper, rng, backend=backend)
            results[backend] = s.as_vector()

        tk, tc = _best_of(kernel), _best_of(chain)
        print(f"{backend:>7}: kernel {1e3 * tk / sweeps:8.3f} ms/sweep   "
              f"gibbs {1e3 * tc / sweeps:8.3f} ms/sweep")
    if len(results) == 2:
        same = np.array_equal(results["python"], results["cython"])
        print(f"backends agree bit-for-bit after {sweeps} sweeps: {same}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--sweeps", type=int, default=200)
    args = ap.parse_args()
    bench(args.n, args.sweeps)
