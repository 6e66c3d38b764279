"""Path-based centrality measures on weighted graphs.

Traversal cost of an edge is the reciprocal of its weight (strong
similarity = short distance, after Newman 2001 / Brandes 2001), so a
zero-weight edge is non-traversable. On top of the resulting shortest-path
distances this module provides:

* weighted closeness, (n-1) / sum of distances (Freeman 1978; Opsahl 2010),
* network efficiency, the mean reciprocal distance over ordered pairs with
  1/inf = 0 (Latora & Marchiori 2001),
* information centrality, the relative efficiency drop when a node is
  deactivated, i.e. all its incident edges are removed while the node
  stays in the vertex set (Latora & Marchiori 2007),

plus plain normalized degree, deg / (n-1).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from . import _kernels
from .corrnet import WeightedGraph
from .errors import DataError
from .filtergraph import FilteredGraph

GraphLike = Union[WeightedGraph, FilteredGraph]

MEASURES = ("degree", "closeness", "information")


@dataclass
class DistanceMatrix:
    """Weighted shortest-path distances; unreachable pairs hold +inf."""

    labels: list[str]
    d: np.ndarray

    def get(self, a: str, b: str) -> float:
        i, j = self.labels.index(a), self.labels.index(b)
        return float(self.d[i, j])


@dataclass(frozen=True)
class CentralityRecord:
    label: str
    degree: float
    closeness: float
    information: float


def _weights_of(g: GraphLike) -> tuple[list[str], np.ndarray]:
    if isinstance(g, FilteredGraph):
        g = g.graph
    return g.labels, g.weights


# Array-level cores. The rolling pipeline calls these directly so that a
# window result is bit-identical to the dict-returning API on the same graph.


def distance_matrix_array(weights: np.ndarray, banned: int = -1) -> np.ndarray:
    n = weights.shape[0]
    indptr, indices, costs = _kernels.csr_reciprocal(weights)
    return _kernels.all_pairs(indptr, indices, costs, n, banned)


def degree_array(weights: np.ndarray) -> np.ndarray:
    n = weights.shape[0]
    return (weights > 0.0).sum(axis=1) / (n - 1)


def closeness_array(dist: np.ndarray) -> np.ndarray:
    """(n-1)/sum of distances per row; 0 for rows with unreachable nodes."""
    n = dist.shape[0]
    finite = np.isfinite(dist)
    out = np.zeros(n, dtype=np.float64)
    complete = finite.all(axis=1)
    sums = np.where(finite, dist, 0.0).sum(axis=1)
    np.divide(n - 1.0, sums, out=out, where=complete & (sums > 0.0))
    return out


def efficiency_from_distances(dist: np.ndarray) -> float:
    n = dist.shape[0]
    off = ~np.eye(n, dtype=bool)
    usable = off & np.isfinite(dist)
    return float((1.0 / dist[usable]).sum() / (n * (n - 1)))


def deactivation_efficiency_array(weights: np.ndarray) -> np.ndarray:
    """Efficiency of the graph after isolating each node in turn."""
    n = weights.shape[0]
    indptr, indices, costs = _kernels.csr_reciprocal(weights)
    sums = _kernels.deactivation_reciprocal_sums(indptr, indices, costs, n)
    return sums / (n * (n - 1))


def information_array(weights: np.ndarray, base_efficiency: float) -> np.ndarray:
    if base_efficiency <= 0.0:
        raise DataError("network efficiency is zero; information centrality undefined")
    return 1.0 - deactivation_efficiency_array(weights) / base_efficiency


# Public graph-level operations.


def shortest_paths(g: GraphLike) -> DistanceMatrix:
    """All-pairs weighted shortest-path distances over reciprocal-weight costs."""
    labels, weights = _weights_of(g)
    return DistanceMatrix(list(labels), distance_matrix_array(weights))


def degree_centrality(g: GraphLike) -> dict[str, float]:
    """Normalized degree deg(i)/(n-1), counting positive-weight edges."""
    labels, weights = _weights_of(g)
    if len(labels) < 2:
        raise ValueError("degree centrality needs at least 2 nodes")
    vals = degree_array(weights)
    return {lab: float(v) for lab, v in zip(labels, vals)}


def closeness_centrality(g: GraphLike) -> dict[str, float]:
    """Normalized weighted closeness; 0 for nodes that cannot reach everyone."""
    labels, weights = _weights_of(g)
    if len(labels) < 2:
        raise ValueError("closeness centrality needs at least 2 nodes")
    vals = closeness_array(distance_matrix_array(weights))
    return {lab: float(v) for lab, v in zip(labels, vals)}


def efficiency(g: GraphLike) -> float:
    """Mean reciprocal shortest-path distance over ordered pairs (1/inf = 0)."""
    labels, weights = _weights_of(g)
    if len(labels) < 2:
        raise ValueError("efficiency needs at least 2 nodes")
    return efficiency_from_distances(distance_matrix_array(weights))


def deactivation_efficiencies(g: GraphLike) -> dict[str, float]:
    """Per node, the graph efficiency after removing its incident edges."""
    labels, weights = _weights_of(g)
    vals = deactivation_efficiency_array(weights)
    return {lab: float(v) for lab, v in zip(labels, vals)}


def information_centrality(g: GraphLike) -> dict[str, float]:
    """Relative efficiency drop per deactivated node; values in [0, 1]."""
    labels, weights = _weights_of(g)
    base = efficiency_from_distances(distance_matrix_array(weights))
    vals = information_array(weights, base)
    return {lab: float(v) for lab, v in zip(labels, vals)}


def average_information_centrality(g: GraphLike) -> float:
    """Mean of node information centralities (network-level score)."""
    vals = information_centrality(g)
    return float(np.mean(list(vals.values())))


def ranking(values: Mapping[str, float], k: int) -> list[tuple[str, float]]:
    """Top-k (label, value) by value descending, ties by label ascending."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ordered = sorted(values.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(lab, float(v)) for lab, v in ordered[:k]]


def centrality_table(g: GraphLike) -> tuple[list[CentralityRecord], dict[str, float]]:
    """All three measures per node plus network aggregates.

    Aggregates: efficiency and average information centrality of the graph.
    """
    labels, weights = _weights_of(g)
    if len(labels) < 2:
        raise ValueError("centrality table needs at least 2 nodes")
    dist = distance_matrix_array(weights)
    deg = degree_array(weights)
    clo = closeness_array(dist)
    base = efficiency_from_distances(dist)
    info = information_array(weights, base)
    records = [
        CentralityRecord(lab, float(d), float(c), float(i))
        for lab, d, c, i in zip(labels, deg, clo, info)
    ]
    aggregates = {"efficiency": base, "average_information_centrality": float(info.mean())}
    return records, aggregates


def write_centrality(records: list[CentralityRecord], path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("label,degree,closeness,information\n")
        for r in records:
            fh.write(f"{r.label},{repr(r.degree)},{repr(r.closeness)},{repr(r.information)}\n")
