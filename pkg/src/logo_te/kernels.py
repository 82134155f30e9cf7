"""Hot loops with a compiled backend and a pure-numpy fallback.

The Cython extension ``logo_te._kernels`` is used when it was built and
``LOGO_TE_PURE`` is unset; otherwise the numpy versions below run. The two
``segment_sum`` versions accumulate rows in input order, so they agree to
rounding. The two MST versions pick the same edges except where distances
tie or differ only by rounding; total tree weight always agrees.
"""

import os

import numpy as np


def segment_sum_py(values, index, n_rows):
    """Sum rows of ``values`` into ``n_rows`` buckets given by ``index``."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    index = np.asarray(index, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= n_rows):
        raise IndexError("segment index out of range")
    out = np.zeros((n_rows, values.shape[1]), dtype=np.float64)
    np.add.at(out, index, values)
    return out


def mst_mutual_reachability_py(X, core):
    """Prim's algorithm on the mutual-reachability graph; returns (src, dst, weight)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    core = np.ascontiguousarray(core, dtype=np.float64)
    n = X.shape[0]
    src = np.zeros(max(n - 1, 0), dtype=np.int64)
    dst = np.zeros(max(n - 1, 0), dtype=np.int64)
    w = np.zeros(max(n - 1, 0), dtype=np.float64)
    if n == 0:
        return src, dst, w
    in_tree = np.zeros(n, dtype=bool)
    best_dist = np.full(n, np.inf)
    best_from = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    current = 0
    for step in range(n - 1):
        diff = X - X[current]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        mr = np.maximum(dist, np.maximum(core[current], core))
        improve = (mr < best_dist) & ~in_tree
        best_dist[improve] = mr[improve]
        best_from[improve] = current
        cand = np.where(in_tree, np.inf, best_dist)
        nxt = int(np.argmin(cand))
        in_tree[nxt] = True
        src[step], dst[step], w[step] = best_from[nxt], nxt, cand[nxt]
        current = nxt
    return src, dst, w


def _load_compiled():
    if os.environ.get("LOGO_TE_PURE"):
        return None
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()

if _compiled is not None:
    BACKEND = "cython"

    def segment_sum(values, index, n_rows):
        return _compiled.segment_sum(np.ascontiguousarray(values, dtype=np.float64),
                                     np.ascontiguousarray(index, dtype=np.int64), int(n_rows))

    def mst_mutual_reachability(X, core):
        return _compiled.mst_mutual_reachability(np.ascontiguousarray(X, dtype=np.float64),
                                                 np.ascontiguousarray(core, dtype=np.float64))
else:
    BACKEND = "python"
    segment_sum = segment_sum_py
    mst_mutual_reachability = mst_mutual_reachability_py
