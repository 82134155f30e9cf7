import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logo_te import kernels


def mst_oracle_weight(X, core):
    # dense Kruskal on the full mutual-reachability matrix
    n = len(X)
    d = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    mr = np.maximum(d, np.maximum(core[:, None], core[None]))
    edges = sorted((mr[i, j], i, j) for i in range(n) for j in range(i + 1, n))
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    total = 0.0
    for w, i, j in edges:
        a, b = find(i), find(j)
        if a != b:
            parent[a] = b
            total += w
    return total


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 5), st.integers(1, 8), st.integers(0, 10_000))
def test_segment_sum_backends_agree(n, d, rows, seed):
    r = np.random.default_rng(seed)
    vals = r.normal(size=(n, d))
    idx = r.integers(0, rows, size=n)
    ref = np.zeros((rows, d))
    for i, j in enumerate(idx):
        ref[j] += vals[i]
    assert np.allclose(kernels.segment_sum_py(vals, idx, rows), ref, atol=1e-12)
    assert np.allclose(kernels.segment_sum(vals, idx, rows), ref, atol=1e-12)


def test_segment_sum_range_check():
    with pytest.raises(IndexError):
        kernels.segment_sum_py(np.ones((2, 1)), [0, 3], 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(1, 4), st.integers(0, 10_000))
def test_mst_backends_agree_with_oracle(n, dim, seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, dim))
    core = r.uniform(0, 0.5, size=n)
    oracle = mst_oracle_weight(X, core)
    for fn in (kernels.mst_mutual_reachability_py, kernels.mst_mutual_reachability):
        src, dst, w = fn(X, core)
        assert len(w) == n - 1
        assert w.sum() == pytest.approx(oracle, rel=1e-12)
        # spanning: every point reached exactly once as a destination
        assert sorted(dst.tolist()) == list(range(1, n)) or len(set(dst.tolist()) | {0}) == n


def test_mst_backends_identical_edges_without_ties():
    r = np.random.default_rng(5)
    X = r.normal(size=(60, 3))
    core = np.zeros(60)
    a = kernels.mst_mutual_reachability_py(X, core)
    b = kernels.mst_mutual_reachability(X, core)
    for u, v in zip(a, b):
        assert np.allclose(u, v)


def test_pure_env_selects_fallback():
    import os
    import subprocess
    import sys

    code = "from logo_te import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=dict(os.environ, LOGO_TE_PURE="1"),
                         capture_output=True, text=True, check=True).stdout.strip()
    assert out == "python"


def test_benchmark_runs(capsys):
    import importlib.util
    import pathlib

    path = pathlib.Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    bench.main(["--repeat", "1", "--sizes", "50"])
    lines = capsys.readouterr().out.splitlines()
    assert any(line.startswith("mst") for line in lines)
    assert "False" not in "\n".join(lines)
