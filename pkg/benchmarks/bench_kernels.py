"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 500 2000]

Both backends are called in one process: the fallback through the ``*_py``
functions, the compiled one through ``logo_te._kernels``. Each row also
checks that the two outputs agree.
"""

import argparse
import timeit

import numpy as np

from logo_te import kernels


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_segment_sum(n, repeat, compiled, rng):
    values = rng.normal(size=(n * 20, 32))
    index = rng.integers(0, n, size=n * 20)
    py = best_of(lambda: kernels.segment_sum_py(values, index, n), repeat)
    row = {"kernel": "segment_sum", "n": n * 20, "python": py}
    if compiled is not None:
        row["cython"] = best_of(lambda: compiled.segment_sum(values, index, n), repeat)
        row["agree"] = np.allclose(compiled.segment_sum(values, index, n), kernels.segment_sum_py(values, index, n))
    return row


def bench_mst(n, repeat, compiled, rng):
    X = rng.normal(size=(n, 16))
    core = rng.uniform(0.1, 1.0, size=n)
    py = best_of(lambda: kernels.mst_mutual_reachability_py(X, core), repeat)
    row = {"kernel": "mst", "n": n, "python": py}
    if compiled is not None:
        row["cython"] = best_of(lambda: compiled.mst_mutual_reachability(X, core), repeat)
        row["agree"] = bool(np.isclose(compiled.mst_mutual_reachability(X, core)[2].sum(),
                                       kernels.mst_mutual_reachability_py(X, core)[2].sum()))
    return row


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 2000])
    args = ap.parse_args(argv)
    try:
        from logo_te import _kernels as compiled
    except ImportError:
        compiled = None
        print("compiled kernels not built; timing the numpy fallback only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12}{'n':>8}{'python s':>12}{'cython s':>12}{'speedup':>10}  agree")
    for n in args.sizes:
        for bench in (bench_segment_sum, bench_mst):
            r = bench(n, args.repeat, compiled, rng)
            if "cython" in r:
                print(f"{r['kernel']:<12}{r['n']:>8}{r['python']:>12.5f}{r['cython']:>12.5f}"
                      f"{r['python'] / r['cython']:>9.1f}x  {r['agree']}")
            else:
                print(f"{r['kernel']:<12}{r['n']:>8}{r['python']:>12.5f}{'-':>12}{'-':>10}  -")


if __name__ == "__main__":
    main()
