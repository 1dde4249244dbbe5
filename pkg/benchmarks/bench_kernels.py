"""Time the compiled and pure-Python kernels on one simulated data set.

Usage: python benchmarks/bench_kernels.py [--sweeps 20] [--months 72]
"""
import argparse
import time

import numpy as np

from tsirsia import kernels
from tsirsia.mcmc import McmcConfig, run_chain
from tsirsia.simulate import SimConfig, simulate


def time_chain(backend, data, n_iter):
    cfg = McmcConfig(n_iter=n_iter, n_burnin=n_iter // 2, fixed_rho=0.3,
                     propagate_uncertainty=False, seed=1, backend=backend)
    t0 = time.perf_counter()
    draws = run_chain(*data, config=cfg)
    return time.perf_counter() - t0, draws


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sweeps", type=int, default=20, help="MCMC iterations per backend")
    ap.add_argument("--months", type=int, default=72)
    args = ap.parse_args()

    sim = simulate(SimConfig(rho=0.3, seed=0)).training(args.months)
    data = (sim.C, sim.demography, sim.config.calendar)
    if kernels.compiled_backend is None:
        print("compiled extension not built; only the Python backend is available")
        backends = ["python"]
    else:
        backends = ["cython", "python"]
    timings, results = {}, {}
    for b in backends:
        secs, draws = time_chain(b, data, args.sweeps)
        timings[b], results[b] = secs, draws
        print(f"{b:>7s}: {secs:8.3f} s for {args.sweeps} iterations "
              f"({1e3 * secs / args.sweeps:.2f} ms/iteration, T={2 * args.months})")
    if len(backends) == 2:
        same = np.array_equal(results["cython"].I, results["python"].I)
        print(f"speed-up: {timings['python'] / timings['cython']:.1f}x; identical draws: {same}")


if __name__ == "__main__":
    main()
