"""HDBSCAN-style density clustering.

Mutual-reachability distances, a minimum spanning tree, the single-linkage
hierarchy it induces, condensation by minimum cluster size, and
excess-of-mass cluster selection. Points that never belong to a selected
cluster are labelled ``-1``.
"""

import numpy as np

from .. import kernels

NOISE = -1


def core_distances(X, k, chunk=512):
    """Distance from each point to its ``k``-th nearest neighbour (the point itself counts)."""
    n = X.shape[0]
    k = min(k, n)
    sq = np.einsum("ij,ij->i", X, X)
    out = np.empty(n)
    for lo in range(0, n, chunk):
        block = X[lo:lo + chunk]
        d2 = sq[lo:lo + chunk, None] + sq[None, :] - 2.0 * block @ X.T
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(block.shape[0]), np.arange(lo, lo + block.shape[0])] = 0.0
        out[lo:lo + chunk] = np.sqrt(np.partition(d2, k - 1, axis=1)[:, k - 1])
    return out


def single_linkage(src, dst, weight, n):
    """Merge MST edges in weight order; returns rows ``(left, right, distance, size)``."""
    order = np.argsort(weight, kind="stable")
    parent = np.arange(2 * n - 1)
    size = np.ones(2 * n - 1, dtype=np.int64)
    nxt = n
    rows = []

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for e in order:
        a, b = find(src[e]), find(dst[e])
        rows.append((a, b, weight[e], size[a] + size[b]))
        parent[a] = parent[b] = nxt
        size[nxt] = size[a] + size[b]
        nxt += 1
    return rows


def _lam(dist):
    return np.inf if dist <= 0 else 1.0 / dist


def condense(linkage, n, min_cluster_size):
    """Condensed cluster tree.

    Returns ``(points, clusters)``: ``points[i] = (cluster, lambda)`` at which
    point ``i`` leaves the tree; ``clusters`` maps cluster id to
    ``(parent, birth_lambda, size)``. Cluster 0 is the root.
    """
    root = n + len(linkage) - 1
    children = {n + i: (int(a), int(b), float(dist)) for i, (a, b, dist, _) in enumerate(linkage)}
    sizes = {n + i: int(sz) for i, (_, _, _, sz) in enumerate(linkage)}

    def size_of(node):
        return 1 if node < n else sizes[node]

    def leaves(node):
        stack, out = [node], []
        while stack:
            x = stack.pop()
            if x < n:
                out.append(x)
            else:
                a, b, _ = children[x]
                stack.extend((a, b))
        return out

    points = [None] * n
    clusters = {0: (None, 0.0, size_of(root) if n else 0)}
    if n == 1:
        points[0] = (0, np.inf)
        return points, clusters
    next_id = 1
    stack = [(root, 0)]
    while stack:
        node, cid = stack.pop()
        a, b, dist = children[node]
        lam = _lam(dist)
        big = [c for c in (a, b) if size_of(c) >= min_cluster_size]
        small = [c for c in (a, b) if size_of(c) < min_cluster_size]
        for c in small:
            for p in leaves(c):
                points[p] = (cid, lam)
        if len(big) == 2:
            for c in big:
                clusters[next_id] = (cid, lam, size_of(c))
                stack.append((c, next_id))
                next_id += 1
        elif len(big) == 1:
            c = big[0]
            if c < n:
                points[c] = (cid, lam)
            else:
                stack.append((c, cid))
    return points, clusters


def select_clusters(points, clusters):
    """Excess-of-mass selection; the root is never selected."""
    stability = {c: 0.0 for c in clusters}
    for cid, lam in points:
        birth = clusters[cid][1]
        stability[cid] += _finite(lam) - birth
    kids = {c: [] for c in clusters}
    for c, (parent, birth, size) in clusters.items():
        if parent is not None:
            kids[parent].append(c)
            stability[parent] += (birth - clusters[parent][1]) * size
    selected = {}
    subtree_best = {}
    for c in sorted(clusters, reverse=True):  # children have larger ids than parents
        child_sum = sum(subtree_best[k] for k in kids[c])
        if c != 0 and (not kids[c] or stability[c] >= child_sum):
            selected[c] = True
            subtree_best[c] = stability[c]
            for k in _descendants(c, kids):
                selected[k] = False
        else:
            selected[c] = False
            subtree_best[c] = child_sum
    return {c for c, keep in selected.items() if keep}, kids


def _finite(lam, cap=1e12):
    return cap if not np.isfinite(lam) else lam


def _descendants(c, kids):
    stack, out = list(kids[c]), []
    while stack:
        x = stack.pop()
        out.append(x)
        stack.extend(kids[x])
    return out


def hdbscan(X, min_cluster_size=10, min_samples=None):
    """Cluster rows of ``X``; returns int labels with ``-1`` for noise.

    Cluster ids are numbered by the smallest member index.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    labels = np.full(n, NOISE, dtype=np.int64)
    if n < min_cluster_size:
        return labels
    core = core_distances(X, min_samples or min_cluster_size)
    src, dst, w = kernels.mst_mutual_reachability(X, core)
    points, clusters = condense(single_linkage(src, dst, w, n), n, min_cluster_size)
    chosen, _ = select_clusters(points, clusters)
    parent = {c: p for c, (p, _, _) in clusters.items()}

    def owner(c):
        while c is not None:
            if c in chosen:
                return c
            c = parent[c]
        return None

    raw = np.array([-1 if owner(cid) is None else owner(cid) for cid, _ in points], dtype=np.int64)
    remap = {}
    for i, c in enumerate(raw):
        if c >= 0 and c not in remap:
            remap[c] = len(remap)
    for i, c in enumerate(raw):
        if c >= 0:
            labels[i] = remap[c]
    return labels


def cluster_documents(features, min_cluster_size=10, min_samples=None):
    """Density clustering of document feature rows (``-1`` marks outliers)."""
    return hdbscan(features, min_cluster_size, min_samples)
