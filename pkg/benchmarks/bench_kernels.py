"""Time the numba and numpy kernel backends on the same grid workloads.

    python3 benchmarks/bench_kernels.py [--n 61] [--repeat 3]

The first numba call includes JIT compilation and is reported separately.
"""

import argparse
import time

import numpy as np

from lcs_fsle import FieldKind, FlowModel, GridSpec, IntegratorConfig, SeparationParams, compute_field
from lcs_fsle import kernels


def workloads(n):
    spec = GridSpec(0.0, 2.0, 0.0, 1.0, 2 * n - 1, n)
    m = FlowModel.double_gyre()
    cfg = IntegratorConfig(dt=1e-2)
    p = SeparationParams(r=2.0, horizon=10.0)
    return {
        "ftle T=10": lambda: compute_field(FieldKind.FTLE, m, spec, 0.0, 10.0, cfg),
        "isle r=2": lambda: compute_field(FieldKind.ISLE, m, spec, 0.0, p, cfg),
        "fsle r=2 8 probes": lambda: compute_field(FieldKind.FSLE, m, spec, 0.0, p, cfg),
    }, spec.size


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=61, help="grid rows (columns = 2n-1)")
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    jobs, size = workloads(a.n)
    print(f"grid points: {size}")
    print(f"{'workload':<20}{'numba s':>10}{'numpy s':>10}{'speedup':>9}{'max |diff|':>12}")
    for name, fn in jobs.items():
        with kernels.use_backend("numba"):
            t0 = time.perf_counter()
            fn()
            jit = time.perf_counter() - t0
            t_nb, v_nb = best_of(fn, a.repeat)
        with kernels.use_backend("numpy"):
            t_np, v_np = best_of(fn, a.repeat)
        diff = np.nanmax(np.abs(v_nb.values - v_np.values))
        print(f"{name:<20}{t_nb:>10.3f}{t_np:>10.3f}{t_np / t_nb:>9.1f}{diff:>12.2e}"
              f"   (first numba call {jit:.2f} s)")


if __name__ == "__main__":
    main()
