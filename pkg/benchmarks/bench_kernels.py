"""Time the compiled and numpy kernel backends on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

import argparse
import json
import statistics
import time

import numpy as np

from descprox import kernels


def cases(rng):
    X = rng.uniform(-1, 1, (400, 3))
    Y = rng.uniform(-1, 1, (400, 3))
    small = [(rng.uniform(-1, 1, (8, 2)), rng.uniform(-1, 1, (8, 2))) for _ in range(2000)]
    n = 4096
    nxt = rng.integers(0, n, n)
    desc = rng.integers(0, 4, (n, 1)).astype(np.float64)
    t = np.linspace(0, 10, 200_000)
    m = np.sin(2 * np.pi * 3.3 * t) + 0.3 * np.sin(2 * np.pi * 17 * t)
    y = m * m
    cuts = np.linspace(0, len(t) - 1, 400).astype(np.int64)

    return {
        "hausdorff 400x400 (3-d)": lambda k: k.hausdorff(X, Y, 0),
        "min_pair_distance 400x400": lambda k: k.min_pair_distance(X, Y, 0),
        "hausdorff 2000 small pairs": lambda k: [k.hausdorff(a, b, 0) for a, b in small],
        "first_return 4096 states, m<=64": lambda k: k.first_return(nxt, desc, 64, 0.0),
        "zero_crossings 200k samples": lambda k: k.zero_crossings(m),
        "segment_trapz 200k, 399 segments": lambda k: k.segment_trapz(t, y, cuts[:-1], cuts[1:]),
    }


def bench(fn, impl, repeat):
    fn(impl)
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(impl)
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="write results to this file")
    args = p.parse_args(argv)

    impls = kernels.backends()
    rng = np.random.default_rng(args.seed)
    rows = []
    for name, fn in cases(rng).items():
        row = {"case": name}
        for backend, impl in sorted(impls.items()):
            row[backend] = bench(fn, impl, args.repeat)
        rows.append(row)

    names = sorted(impls)
    print(f"{'case':<36}" + "".join(f"{n + ' (ms)':>16}" for n in names)
          + (f"{'speedup':>10}" if len(names) == 2 else ""))
    for row in rows:
        line = f"{row['case']:<36}" + "".join(f"{row[n] * 1e3:>16.3f}" for n in names)
        if "cython" in row and "python" in row:
            line += f"{row['python'] / row['cython']:>9.1f}x"
        print(line)
    if "cython" not in impls:
        print("compiled extension not built; only the numpy backend was timed")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
