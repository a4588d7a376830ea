"""Compare the compiled and numpy rank-distance kernels.

    python benchmarks/bench_kernels.py [--trials 100000] [--sizes 36 87]

Times the random baseline (the hot loop) on each available backend and checks
that both produce identical means.
"""

import argparse
import time

from cwerank import _backend
from cwerank.rankdist import DEFAULT_SEED, random_baseline, random_permutations


def backends():
    names = ["python"]
    try:
        _backend.get("cython")
    except ImportError:
        print("compiled kernels not built; timing the numpy fallback only")
    else:
        names.insert(0, "cython")
    return names


def timed(fn, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--sizes", type=int, nargs="+", default=[36, 87])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    names = backends()
    print(f"{'n':>5} {'stage':<14} " + " ".join(f"{name:>10}" for name in names))
    for n in args.sizes:
        perms = random_permutations(n, args.trials, DEFAULT_SEED)
        kernel_times = [timed(lambda k=_backend.get(name): k.batch_distances(perms), args.repeat)[0] for name in names]
        print(f"{n:>5} {'kernel only':<14} " + " ".join(f"{t:>9.3f}s" for t in kernel_times))
        runs = [timed(lambda name=name: random_baseline(n, args.trials, backend=name), args.repeat) for name in names]
        print(f"{n:>5} {'full baseline':<14} " + " ".join(f"{t:>9.3f}s" for t, _ in runs))
        means = {(r.mean_kendall, r.mean_footrule) for _, r in runs}
        if len(means) != 1:
            raise SystemExit(f"backends disagree for n={n}: {means}")
        k, f = means.pop()
        print(f"{n:>5} {'means':<14} K={k:.2f} F={f:.2f} (identical across backends)")


if __name__ == "__main__":
    main()
