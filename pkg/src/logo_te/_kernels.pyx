# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Pure-numpy equivalents live in logo_te.kernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


def segment_sum(double[:, ::1] values, long long[::1] index, Py_ssize_t n_rows):
    cdef Py_ssize_t n = values.shape[0], d = values.shape[1], i, j, row
    out_arr = np.zeros((n_rows, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        row = index[i]
        if row < 0 or row >= n_rows:
            raise IndexError("segment index out of range")
        for j in range(d):
            out[row, j] += values[i, j]
    return out_arr


def mst_mutual_reachability(double[:, ::1] X, double[::1] core):
    """Prim's algorithm on the implicit complete mutual-reachability graph."""
    cdef Py_ssize_t n = X.shape[0], dim = X.shape[1]
    cdef Py_ssize_t step, i, k, current = 0, best
    cdef double dist, diff, best_d, mr
    src_arr = np.zeros(max(n - 1, 0), dtype=np.int64)
    dst_arr = np.zeros(max(n - 1, 0), dtype=np.int64)
    w_arr = np.zeros(max(n - 1, 0), dtype=np.float64)
    cdef long long[::1] src = src_arr
    cdef long long[::1] dst = dst_arr
    cdef double[::1] w = w_arr
    in_tree_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] in_tree = in_tree_arr
    best_arr = np.full(n, INFINITY, dtype=np.float64)
    cdef double[::1] best_dist = best_arr
    from_arr = np.zeros(n, dtype=np.int64)
    cdef long long[::1] best_from = from_arr
    if n == 0:
        return src_arr, dst_arr, w_arr
    in_tree[0] = 1
    for step in range(n - 1):
        best = -1
        best_d = INFINITY
        for i in range(n):
            if in_tree[i]:
                continue
            dist = 0.0
            for k in range(dim):
                diff = X[current, k] - X[i, k]
                dist += diff * diff
            dist = sqrt(dist)
            mr = dist
            if core[current] > mr:
                mr = core[current]
            if core[i] > mr:
                mr = core[i]
            if mr < best_dist[i]:
                best_dist[i] = mr
                best_from[i] = current
            if best_dist[i] < best_d:
                best_d = best_dist[i]
                best = i
        in_tree[best] = 1
        src[step] = best_from[best]
        dst[step] = best
        w[step] = best_d
        current = best
    return src_arr, dst_arr, w_arr
