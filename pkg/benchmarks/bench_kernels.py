"""Compiled vs numpy sampler kernels on the acceptance-suite workloads.

    python3 benchmarks/bench_kernels.py [--samples 20000] [--out bench.csv]
"""

import argparse
import os
import sys
import time

import numpy as np

from swlab import _accel, io
from swlab.excursion_kernels import transfer_kernel
from swlab.operator_spectrum import build_resolvent, free_energy, leading_eigen
from swlab.partition import renewal_tables, strip_partition
from swlab.pinning import constant_pinning
from swlab.rw_core import Grid, RngStream, critical_beta, make_gaussian_model
from swlab.sampler import sample_contacts_markov_renewal, sample_contacts_renewal


def timed(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--N", type=int, default=4096)
    ap.add_argument("--grid", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    if "compiled" not in _accel.available():
        print("compiled backend not built; nothing to compare", file=sys.stderr)
        return 1
    N = args.N
    bc = critical_beta()
    R = renewal_tables(bc, N)
    a = N ** -0.75
    T = transfer_kernel(make_gaussian_model(), a, Grid(a, args.grid), N)
    bca = -np.log(leading_eigen(build_resolvent(T, 0.0)).delta)
    F = free_energy(T, bca)
    sp = leading_eigen(build_resolvent(T, F))
    pin = constant_pinning(a, bca)
    S = strip_partition(pin, T, N, tilt=F)
    cases = {
        "renewal_forward": lambda b: sample_contacts_renewal(bc, N, "f", R, RngStream(1, 0), args.samples, backend=b),
        "markov_backward": lambda b: sample_contacts_markov_renewal(pin, S, T, sp, N, "f", RngStream(1, 1),
                                                                    args.samples, backend=b),
    }
    rows = []
    for name, fn in cases.items():
        tc, bcmp = timed(lambda: fn("compiled"), args.repeat)
        tp, bpy = timed(lambda: fn("python"), args.repeat)
        same = np.array_equal(bcmp.offsets, bpy.offsets) and np.array_equal(bcmp.idx, bpy.idx) \
            and np.array_equal(bcmp.pos, bpy.pos)
        rows.append((name, N, args.samples, tc, tp, tp / tc, same))
        print(f"{name:16s} N={N} samples={args.samples}  compiled {tc:8.3f}s  python {tp:8.3f}s  "
              f"speedup {tp / tc:6.1f}x  identical={same}")
    if args.out:
        io.write_csv(args.out, ["kernel", "N", "samples", "compiled_s", "python_s", "speedup", "identical"], rows)
    return 0


if __name__ == "__main__":
    os.environ.setdefault("SWLAB_THREADS", "1")
    sys.exit(main())
