"""Information-filtering subgraphs of dense similarity graphs.

Two filters are provided. The triangulated maximally filtered graph keeps
3(n-2) edges by greedily growing a planar triangulation (Massara, Di Matteo
& Aste 2016): seed with a heavy 4-clique, then repeatedly insert the
remaining vertex with the highest gain into a triangular face, splitting it
into three. The minimum spanning tree keeps the n-1 edges minimizing total
distance, with correlation-style weights mapped to distances either by the
Mantegna (1999) ultrametric sqrt(2(1-w)) or by reciprocal weight.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .corrnet import WeightedGraph
from .errors import DataError, ParseError

TMFG = "tmfg"
MST = "mst"

MANTEGNA = "mantegna"
INVERSE_WEIGHT = "inverse_weight"


@dataclass
class FilteredGraph:
    """A sparse filtered view of a dense weighted graph.

    `edges` (sorted index pairs) is the structural truth: a TMFG must keep
    3(n-2) edges even when some have zero weight. Zero-weight retained edges
    are listed in `zero_weight_edges`; they are absent from `graph.weights`
    and therefore non-traversable in path computations.
    """

    graph: WeightedGraph
    kind: str
    edges: list[tuple[int, int]]
    retained_weight: float
    faces: list[tuple[int, int, int]] = field(default_factory=list)
    zero_weight_edges: list[tuple[int, int]] = field(default_factory=list)

    @property
    def labels(self) -> list[str]:
        return self.graph.labels

    @property
    def n(self) -> int:
        return self.graph.n

    def edge_labels(self) -> list[tuple[str, str, float]]:
        labels = self.graph.labels
        return [(labels[i], labels[j], float(self.graph.weights[i, j])) for i, j in self.edges]


def _seed_clique(weights: np.ndarray) -> tuple[int, int, int, int]:
    # Heaviest 4-clique among the top-8 row-sum vertices; plain row-sum
    # top-4 below 8 nodes. Ties resolve to the lexicographically smallest
    # vertex tuple.
    n = weights.shape[0]
    rowsums = weights.sum(axis=1)
    order = np.argsort(-rowsums, kind="stable")
    if n < 8:
        return tuple(sorted(int(v) for v in order[:4]))
    candidates = sorted(int(v) for v in order[:8])
    best = None
    best_w = -1.0
    for quad in combinations(candidates, 4):
        w = sum(weights[a, b] for a, b in combinations(quad, 2))
        if w > best_w:
            best_w = w
            best = quad
    return best


def tmfg(dense: WeightedGraph) -> FilteredGraph:
    """Greedy maximal-planar filter retaining 3(n-2) edges.

    Deterministic: gain ties insert the lowest vertex index into the
    earliest-created face. Zero-weight edges demanded by the triangulation
    are retained but flagged.
    """
    n = dense.n
    w = dense.weights
    if n < 3:
        raise DataError(f"TMFG needs at least 3 nodes, got {n}")
    if n == 3:
        edges = [(0, 1), (0, 2), (1, 2)]
        faces = [(0, 1, 2), (0, 1, 2)]  # inner and outer face of the triangle
        return _assemble(dense, TMFG, edges, faces)

    seed = _seed_clique(w)
    edges = [tuple(sorted(p)) for p in combinations(seed, 2)]
    s0, s1, s2, s3 = seed
    faces: list[tuple[int, int, int]] = [(s0, s1, s2), (s0, s1, s3), (s0, s2, s3), (s1, s2, s3)]
    alive = [True] * 4

    total_faces = 4 + 3 * (n - 4)
    gains = np.full((n, total_faces), -1.0)
    inserted = np.zeros(n, dtype=bool)
    inserted[list(seed)] = True
    remaining = ~inserted
    for col, (a, b, c) in enumerate(faces):
        gains[remaining, col] = w[remaining, a] + w[remaining, b] + w[remaining, c]
    ncols = 4

    for _ in range(n - 4):
        flat = int(np.argmax(gains[:, :ncols]))
        v, col = divmod(flat, ncols)
        a, b, c = faces[col]
        edges.extend(((min(v, a), max(v, a)), (min(v, b), max(v, b)), (min(v, c), max(v, c))))
        alive[col] = False
        gains[:, col] = -1.0
        inserted[v] = True
        gains[v, :] = -1.0
        remaining = ~inserted
        for x, y in ((a, b), (a, c), (b, c)):
            faces.append(tuple(sorted((x, y, v))))
            alive.append(True)
            if remaining.any():
                gains[remaining, ncols] = w[remaining, x] + w[remaining, y] + w[remaining, v]
            ncols += 1

    final_faces = [f for f, ok in zip(faces, alive) if ok]
    return _assemble(dense, TMFG, edges, final_faces)


def _assemble(dense, kind, edges, faces) -> FilteredGraph:
    w = dense.weights
    edges = sorted(edges)
    mask = np.zeros_like(w, dtype=bool)
    for i, j in edges:
        mask[i, j] = mask[j, i] = True
    retained = float(sum(w[i, j] for i, j in edges))
    zero_edges = [(i, j) for i, j in edges if w[i, j] == 0.0]
    graph = WeightedGraph(list(dense.labels), np.where(mask, w, 0.0))
    return FilteredGraph(
        graph=graph,
        kind=kind,
        edges=edges,
        retained_weight=retained,
        faces=list(faces),
        zero_weight_edges=zero_edges,
    )


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def mst(dense: WeightedGraph, metric: str = MANTEGNA) -> FilteredGraph:
    """Minimum spanning tree under a similarity-to-distance transform.

    `mantegna` maps a weight w in [0, 1] to sqrt(2(1-w)); `inverse_weight`
    uses 1/w. Zero-weight pairs are non-edges either way. Kruskal with ties
    broken by index pair keeps the result deterministic.
    """
    n = dense.n
    w = dense.weights
    if n < 2:
        raise DataError(f"MST needs at least 2 nodes, got {n}")
    if metric not in (MANTEGNA, INVERSE_WEIGHT):
        raise ValueError(f"unknown metric {metric!r}")
    degrees = (w > 0.0).sum(axis=1)
    if (degrees == 0).any():
        lonely = dense.labels[int(np.argmin(degrees))]
        raise DataError(f"similarity graph is disconnected: node {lonely!r} has no edges")

    iu, ju = np.nonzero(np.triu(w, 1) > 0.0)
    if metric == MANTEGNA:
        if w.max(initial=0.0) > 1.0:
            raise ValueError("mantegna metric requires weights in [0, 1]")
        dist = np.sqrt(2.0 * (1.0 - w[iu, ju]))
    else:
        dist = 1.0 / w[iu, ju]
    order = sorted(range(len(dist)), key=lambda e: (dist[e], int(iu[e]), int(ju[e])))

    uf = _UnionFind(n)
    edges: list[tuple[int, int]] = []
    for e in order:
        i, j = int(iu[e]), int(ju[e])
        if uf.union(i, j):
            edges.append((i, j))
            if len(edges) == n - 1:
                break
    if len(edges) != n - 1:
        root0 = uf.find(0)
        cut = next(dense.labels[v] for v in range(n) if uf.find(v) != root0)
        raise DataError(f"similarity graph is disconnected: node {cut!r} unreachable from {dense.labels[0]!r}")
    return _assemble(dense, MST, edges, [])


@dataclass(frozen=True)
class PlanarityCertificate:
    edge_count_ok: bool
    euler_ok: bool
    connected: bool

    @property
    def ok(self) -> bool:
        return self.edge_count_ok and self.euler_ok and self.connected


def planarity_certificate(fg: FilteredGraph) -> PlanarityCertificate:
    """Structural witness for a TMFG: 3(n-2) edges, Euler's formula over the
    maintained triangular faces (outer face included), and connectivity."""
    if fg.kind != TMFG:
        raise ValueError("planarity certificate applies to TMFG graphs")
    n = fg.n
    m = len(set(fg.edges))
    edge_count_ok = m == 3 * (n - 2)

    edge_set = {tuple(sorted(e)) for e in fg.edges}
    faces_valid = all(
        len({a, b, c}) == 3
        and (a, b) in edge_set
        and (a, c) in edge_set
        and (b, c) in edge_set
        for a, b, c in (tuple(sorted(f)) for f in fg.faces)
    )
    euler_ok = faces_valid and (n - m + len(fg.faces) == 2)

    adjacency: dict[int, list[int]] = {i: [] for i in range(n)}
    for i, j in edge_set:
        adjacency[i].append(j)
        adjacency[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adjacency[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return PlanarityCertificate(edge_count_ok, euler_ok, len(seen) == n)


def write_filtered_graph(fg: FilteredGraph, path, meta_path=None) -> None:
    """Edge list `u,v,weight` plus a JSON sidecar with structure metadata."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("u,v,weight\n")
        for u, v, weight in fg.edge_labels():
            fh.write(f"{u},{v},{repr(weight)}\n")
    labels = fg.graph.labels
    meta = {
        "kind": fg.kind,
        "n": fg.n,
        "labels": labels,
        "retained_weight": fg.retained_weight,
        "edge_count": len(fg.edges),
        "zero_weight_edges": [[labels[i], labels[j]] for i, j in fg.zero_weight_edges],
        "faces": [[labels[a], labels[b], labels[c]] for a, b, c in fg.faces],
    }
    if meta_path is None:
        meta_path = path.with_suffix(".meta.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_filtered_graph(path, meta_path=None) -> FilteredGraph:
    path = Path(path)
    if meta_path is None:
        meta_path = path.with_suffix(".meta.json")
    with open(meta_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    labels = list(meta["labels"])
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    w = np.zeros((n, n))
    edges: list[tuple[int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "u,v,weight":
            raise ParseError(f"edge file {path}: expected header 'u,v,weight'")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            u, v, weight = line.split(",")
            i, j = index[u], index[v]
            edges.append(tuple(sorted((i, j))))
            w[i, j] = w[j, i] = float(weight)
    faces = [tuple(sorted(index[x] for x in f)) for f in meta.get("faces", [])]
    zero = [tuple(sorted((index[a], index[b]))) for a, b in meta.get("zero_weight_edges", [])]
    return FilteredGraph(
        graph=WeightedGraph(labels, w),
        kind=meta["kind"],
        edges=sorted(edges),
        retained_weight=float(meta["retained_weight"]),
        faces=faces,
        zero_weight_edges=zero,
    )
