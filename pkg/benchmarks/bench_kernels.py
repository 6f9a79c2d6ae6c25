"""Time the numba kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--n1 1024] [--n2 16] [--repeat 20]

Inputs are the default perturbed weak-shock state on the requested grid.
The first numba call (compilation or cache load) is excluded.
"""
import argparse
import time

from shocklab import kernels
from shocklab.acceptance import weak_shock_table
from shocklab.solver import Grid3, PerturbationSpec, init_state


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n1", type=int, default=1024)
    ap.add_argument("--n2", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    table = weak_shock_table()
    grid = Grid3(100.0, args.n1, args.n2, args.n2)
    U = init_state(table, grid, PerturbationSpec(0.01)).U
    sigma, gamma = table.constants.sigma, table.law.gamma
    vs = table.sample(grid.xi1).v
    L = kernels.rhs_numpy(U, gamma, sigma, 1.0, 0.0, *grid.spacing)

    cases = {
        "rhs": lambda k: getattr(kernels, f"rhs_{k}")(U, gamma, sigma, 1.0, 0.0, *grid.spacing),
        "shift_slabs": lambda k: getattr(kernels, f"shift_slabs_{k}")(U[0], vs, gamma),
        "wave_speeds": lambda k: getattr(kernels, f"wave_speeds_{k}")(U, gamma, sigma),
        "stage_update": lambda k: getattr(kernels, f"stage_update_{k}")(U, U, L, 1e-3, 0.75, 0.25),
    }
    print(f"grid {grid.shape}, best of {args.repeat}")
    print(f"{'kernel':<14}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name, call in cases.items():
        tn = best_of(lambda: call("numba"), args.repeat)
        tp = best_of(lambda: call("numpy"), args.repeat)
        print(f"{name:<14}{1e3 * tn:10.2f}{1e3 * tp:10.2f}{tp / tn:9.1f}")


if __name__ == "__main__":
    main()
