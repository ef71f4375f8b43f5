"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per (kernel, size) with the best-of-N wall time of each backend
and the speedup. Both backends are called directly, so no environment variable
is needed.
"""
import argparse
import timeit

import numpy as np

from qbattery import _pykernels
from qbattery.bounds import _signs, integration_grid
from qbattery.hamiltonians import BatterySpec, build_battery, realization_rng, sy_couplings, sy_pauli_sum
from qbattery.operators import eigendecompose, pauli_masks, to_dense

try:
    from qbattery import _ckernels
except ImportError:
    _ckernels = None


def pauli_case(L):
    x, z, amps = pauli_masks(sy_pauli_sum(sy_couplings(realization_rng(0, L, 0), L), L))
    n = 1 << L
    states = np.arange(n, dtype=np.int64)

    def run(mod):
        mod.pauli_accumulate(np.zeros((n, n), np.complex128), states, states, x, z, amps)
    return run


def integral_case(L):
    H = build_battery(BatterySpec(L, 0.7))
    V = to_dense(sy_pauli_sum(sy_couplings(realization_rng(0, L, 0), L), L))
    spec = eigendecompose(H)
    de = 2 * 0.7 * 2
    widths, mids = integration_grid(spec.values, de)
    signs = np.ascontiguousarray(_signs(spec.values, de, mids))
    vt = np.ascontiguousarray(spec.to_eigenbasis(V))
    widths = np.ascontiguousarray(widths)

    def run(mod):
        mod.sign_integral(vt, signs, widths)
    return run


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the fallback can be timed")
    print(f"{'kernel':18s} {'L':>3s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>8s}")
    cases = [("pauli_accumulate", pauli_case, (6, 8, 10, 12)),
             ("sign_integral", integral_case, (4, 6, 8))]
    for name, make, sizes in cases:
        for L in sizes:
            run = make(L)
            tp = best(lambda: run(_pykernels), args.repeat)
            if _ckernels is None:
                print(f"{name:18s} {L:3d} {tp:12.5f} {'-':>12s} {'-':>8s}")
                continue
            tc = best(lambda: run(_ckernels), args.repeat)
            print(f"{name:18s} {L:3d} {tp:12.5f} {tc:12.5f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
