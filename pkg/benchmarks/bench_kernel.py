"""Compare the Cython and numpy enumeration kernels on the (K, L, N) = (3, 2, 3)
privacy maps.

    python3 benchmarks/bench_kernel.py [--demands 4] [--repeat 3]
"""

from __future__ import annotations

import argparse
import itertools
import time

import numpy as np

from privcache.infoverify import Config, available_backends
from privcache.infoverify import kernel
from privcache.infoverify.oracles import Observables
from privcache.model import DemandVector, InstanceParams
from privcache.schemes import singleton_scheme


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--demands", type=int, default=4, help="demand vectors to evaluate")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    obs = Observables(Config(singleton_scheme(), InstanceParams(3, 2, 3, 3), "pad"))
    demands = list(itertools.islice(itertools.product((1, 2, 3), repeat=3), args.demands))
    maps = [obs.quadratic_map(DemandVector(d), validate=False) for d in demands]
    cells = len(maps) << obs.n_vars
    print(f"{len(maps)} maps, {obs.n_vars} variables, {obs.width}-bit codes, {cells} cells")

    results = {}
    for backend in available_backends():
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            out = [kernel.evaluate_all(m, backend) for m in maps]
            best = min(best, time.perf_counter() - t0)
        results[backend] = out
        print(f"{backend:>7}: {best:.3f} s  ({cells / best / 1e6:.1f} M cells/s)")
    ref = next(iter(results.values()))
    for name, out in results.items():
        assert all(np.array_equal(a, b) for a, b in zip(out, ref)), name
    print("outputs identical across backends")


if __name__ == "__main__":
    main()
