"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_core.py [--repeat 5] [--draws 5]

Times each kernel in isolation, then a small slice of the quadratic sweep
with the whole package switched to each backend.
"""
import argparse
import timeit

import numpy as np

import frodo.optimizers as optimizers_mod
import frodo.topology as topology_mod
from frodo._backend import available_backends
from frodo.experiments import SweepSpec, run_experiment1
from frodo.kernel import build_kernel
from frodo.topology import fully_connected


def kernel_cases(core, rng):
    kernel = build_kernel(0.15, 90)
    ring = rng.normal(size=(90, 2))
    x, g, out = rng.normal(size=2), rng.normal(size=2), np.empty(2)
    g4 = fully_connected(4)
    states = rng.normal(size=(4, 2))
    cons_out = np.empty_like(states)
    return {
        "weighted_ring_sum (T=90, n=2)": lambda: core.weighted_ring_sum(kernel.weights, ring, 37, 90, out),
        "memory_descent (T=90, n=2)": lambda: core.memory_descent(x, g, kernel.weights, ring, 37, 90, 1e-9, 1e-9, out),
        "consensus_csr (N=4, n=2)": lambda: core.consensus_csr(g4._indptr, g4._indices, states, cons_out),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=20000)
    parser.add_argument("--draws", type=int, default=5)
    args = parser.parse_args()
    backends = available_backends()
    rng = np.random.default_rng(0)

    print(f"{'kernel':<32}" + "".join(f"{name:>14}" for name in backends))
    cases = {name: kernel_cases(core, rng) for name, core in backends.items()}
    for label in next(iter(cases.values())):
        row = f"{label:<32}"
        for name in backends:
            best = min(timeit.repeat(cases[name][label], number=args.number, repeat=args.repeat))
            row += f"{best / args.number * 1e6:>11.2f} us"
        print(row)

    spec = SweepSpec(draws=args.draws, seed=0)
    reports = {}
    print(f"\nquadratic sweep, {args.draws} draws x 5 starts x 3 variants:")
    for name, core in backends.items():
        optimizers_mod.core = core
        topology_mod.core = core
        best = min(timeit.repeat(lambda: reports.__setitem__(name, run_experiment1(spec)), number=1, repeat=3))
        print(f"  {name:<8} {best:8.3f} s")
    if len(reports) == 2:
        a, b = (r["runs"] for r in reports.values())
        same = [x["iterations"] for x in a] == [y["iterations"] for y in b]
        print(f"  iteration counts identical across backends: {same}")


if __name__ == "__main__":
    main()
