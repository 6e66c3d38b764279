"""Compiled shortest-path kernels.

Graphs are passed as CSR arrays (indptr, indices, costs) where costs are
reciprocal edge weights. A `banned` node is treated as deleted: never
traversed and never used as a source. All kernels are sequential and
deterministic; callers own any parallelism.
"""

from __future__ import annotations

import numpy as np
from numba import njit

INF = np.inf


def csr_reciprocal(weights: np.ndarray):
    """CSR arrays of traversal costs 1/w over the positive entries of a weight matrix."""
    n = weights.shape[0]
    rows, cols = np.nonzero(weights > 0.0)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    costs = 1.0 / weights[rows, cols]
    return indptr, cols.astype(np.int64), costs


@njit(cache=True)
def _sssp(indptr, indices, costs, n, source, banned, dist, settled, parent, heap_key, heap_node):
    # Dijkstra with an array binary heap and lazy deletion. Fills dist and
    # parent for `source`; nodes equal to `banned` are skipped entirely.
    for i in range(n):
        dist[i] = INF
        settled[i] = False
        parent[i] = -1
    dist[source] = 0.0
    heap_key[0] = 0.0
    heap_node[0] = source
    hs = 1
    remaining = n - 1 if banned >= 0 else n
    done = 0
    while hs > 0:
        u = heap_node[0]
        hs -= 1
        if hs > 0:
            mk = heap_key[hs]
            mn = heap_node[hs]
            i = 0
            half = hs >> 1
            while i < half:
                l = 2 * i + 1
                r = l + 1
                if r < hs and heap_key[r] < heap_key[l]:
                    l = r
                if heap_key[l] >= mk:
                    break
                heap_key[i] = heap_key[l]
                heap_node[i] = heap_node[l]
                i = l
            heap_key[i] = mk
            heap_node[i] = mn
        if settled[u]:
            continue
        settled[u] = True
        done += 1
        if done == remaining:
            break
        du = dist[u]
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if v == banned or settled[v]:
                continue
            nd = du + costs[e]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                j = hs
                hs += 1
                while j > 0:
                    p = (j - 1) >> 1
                    if heap_key[p] > nd:
                        heap_key[j] = heap_key[p]
                        heap_node[j] = heap_node[p]
                        j = p
                    else:
                        break
                heap_key[j] = nd
                heap_node[j] = v


@njit(cache=True)
def all_pairs(indptr, indices, costs, n, banned=-1):
    """All-pairs distance matrix; unreachable pairs hold +inf.

    With banned >= 0 the banned node keeps d[banned, banned] = 0 and +inf
    against every other node.
    """
    cap = indices.shape[0] + n + 1
    dist = np.empty(n, dtype=np.float64)
    settled = np.zeros(n, dtype=np.bool_)
    parent = np.empty(n, dtype=np.int64)
    hk = np.empty(cap, dtype=np.float64)
    hn = np.empty(cap, dtype=np.int64)
    out = np.full((n, n), INF, dtype=np.float64)
    for src in range(n):
        if src == banned:
            out[src, src] = 0.0
            continue
        _sssp(indptr, indices, costs, n, src, banned, dist, settled, parent, hk, hn)
        for v in range(n):
            out[src, v] = dist[v]
        if banned >= 0:
            out[src, banned] = INF
    return out


@njit(cache=True)
def deactivation_reciprocal_sums(indptr, indices, costs, n):
    """Per node i: sum of 1/d over ordered pairs of the graph with i isolated.

    A source row is unchanged by deactivating i unless i is internal to that
    source's shortest-path tree, so only those rows are recomputed; for the
    rest the base row sum just sheds the pair with i. Division by n(n-1)
    turns the sums into deactivated-graph efficiencies.
    """
    cap = indices.shape[0] + n + 1
    dist = np.empty(n, dtype=np.float64)
    settled = np.zeros(n, dtype=np.bool_)
    parent = np.empty(n, dtype=np.int64)
    hk = np.empty(cap, dtype=np.float64)
    hn = np.empty(cap, dtype=np.int64)

    base = np.empty((n, n), dtype=np.float64)
    internal = np.zeros((n, n), dtype=np.bool_)
    rowsum = np.zeros(n, dtype=np.float64)
    for src in range(n):
        _sssp(indptr, indices, costs, n, src, -1, dist, settled, parent, hk, hn)
        s = 0.0
        for v in range(n):
            base[src, v] = dist[v]
            if v != src and dist[v] < INF:
                s += 1.0 / dist[v]
            p = parent[v]
            if p >= 0:
                internal[src, p] = True
        rowsum[src] = s

    out = np.zeros(n, dtype=np.float64)
    for banned in range(n):
        s = 0.0
        for src in range(n):
            if src == banned:
                continue
            if internal[src, banned]:
                _sssp(indptr, indices, costs, n, src, banned, dist, settled, parent, hk, hn)
                rs = 0.0
                for v in range(n):
                    if v != src and v != banned and dist[v] < INF:
                        rs += 1.0 / dist[v]
                s += rs
            else:
                d = base[src, banned]
                if d < INF:
                    s += rowsum[src] - 1.0 / d
                else:
                    s += rowsum[src]
        out[banned] = s
    return out
