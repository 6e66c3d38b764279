"""Pearson correlation matrices and their similarity-graph form.

Correlations are computed over aligned return panels; the similarity graph
takes absolute values and zeroes the diagonal so the matrix doubles as the
weight matrix of a simple undirected graph.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .marketdata import ReturnPanel, format_timestamp

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class ObservationWindow:
    """Time span and observation count behind a correlation estimate."""

    start_ms: int
    end_ms: int
    nobs: int


@dataclass
class CorrelationMatrix:
    """Symmetric Pearson coefficient matrix with unit diagonal."""

    symbols: list[str]
    values: np.ndarray
    window: ObservationWindow

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n = len(self.symbols)
        if self.values.shape != (n, n):
            raise ValueError(f"correlation matrix shape {self.values.shape} != ({n}, {n})")
        if np.abs(self.values - self.values.T).max(initial=0.0) > SYMMETRY_TOL:
            raise ValueError("correlation matrix is not symmetric")
        if np.abs(np.diag(self.values) - 1.0).max(initial=0.0) != 0.0:
            raise ValueError("correlation diagonal must be exactly 1")
        if self.values.min(initial=0.0) < -1.0 or self.values.max(initial=0.0) > 1.0:
            raise ValueError("correlation entries must lie in [-1, 1]")


@dataclass
class WeightedGraph:
    """Simple undirected graph as a symmetric non-negative weight matrix.

    An edge (i, j) exists iff weights[i, j] > 0; the diagonal is zero.
    """

    labels: list[str]
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        n = len(self.labels)
        if self.weights.shape != (n, n):
            raise ValueError(f"weight matrix shape {self.weights.shape} != ({n}, {n})")
        if np.abs(self.weights - self.weights.T).max(initial=0.0) > SYMMETRY_TOL:
            raise ValueError("weight matrix is not symmetric")
        if np.diag(self.weights).any():
            raise ValueError("weight matrix diagonal must be zero (no loops)")
        if self.weights.min(initial=0.0) < 0.0:
            raise ValueError("weights must be non-negative")

    @property
    def n(self) -> int:
        return len(self.labels)

    def edge_count(self) -> int:
        return int(np.count_nonzero(np.triu(self.weights, 1)))


def correlation_matrix(panel: ReturnPanel, row_range: tuple[int, int] | None = None) -> CorrelationMatrix:
    """Sample Pearson coefficients between panel columns over a row slice.

    Columns with zero variance over the slice get coefficient 0 against
    everything (diagonal stays 1); fewer than 3 selected rows is fatal.
    """
    if panel.n_symbols < 2:
        raise DataError("correlation needs at least 2 symbols")
    lo, hi = row_range if row_range is not None else (0, panel.returns.shape[0])
    x = panel.returns[lo:hi]
    if x.shape[0] < 3:
        raise DataError(f"correlation window has {x.shape[0]} rows; need at least 3")
    xc = x - x.mean(axis=0)
    norms = np.sqrt((xc * xc).sum(axis=0))
    degenerate = norms == 0.0
    if degenerate.any():
        which = [panel.symbols[i] for i in np.nonzero(degenerate)[0]]
        log.warning("zero-variance columns get correlation 0: %s", ", ".join(which))
    denom = np.where(degenerate, 1.0, norms)
    c = (xc.T @ xc) / np.outer(denom, denom)
    c[degenerate, :] = 0.0
    c[:, degenerate] = 0.0
    c = np.clip((c + c.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(c, 1.0)
    stamps = panel.row_timestamps[lo:hi]
    window = ObservationWindow(int(stamps[0]), int(stamps[-1]), int(x.shape[0]))
    return CorrelationMatrix(list(panel.symbols), c, window)


def to_similarity_graph(corr: CorrelationMatrix) -> WeightedGraph:
    """Absolute-valued, zero-diagonal correlation matrix as a weighted graph."""
    w = np.abs(corr.values)
    np.fill_diagonal(w, 0.0)
    return WeightedGraph(list(corr.symbols), w)


def top_correlations(corr: CorrelationMatrix, k: int) -> list[tuple[str, str, float]]:
    """k largest off-diagonal coefficients by signed value.

    Each unordered pair appears once; ties broken by lexicographic symbol
    pair. k beyond the number of pairs returns all pairs.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(corr.symbols)
    iu, ju = np.triu_indices(n, 1)
    pairs = []
    for i, j in zip(iu, ju):
        a, b = corr.symbols[i], corr.symbols[j]
        if b < a:
            a, b = b, a
        pairs.append((a, b, float(corr.values[i, j])))
    pairs.sort(key=lambda t: (-t[2], t[0], t[1]))
    return pairs[:k]


_QUANTILES = (("Q1", 25.0), ("median", 50.0), ("Q3", 75.0))


def summary_stats(panel: ReturnPanel, symbols: Sequence[str]) -> dict[str, dict[str, float]]:
    """Per-symbol return statistics: mean, std (sample), extremes and quartiles.

    Quartiles use linear interpolation between closest ranks. Values are in
    the panel's native units (fractional log returns); scale at presentation
    time if percentages are wanted.
    """
    if not symbols:
        raise ValueError("symbols must be non-empty")
    index = {s: i for i, s in enumerate(panel.symbols)}
    out: dict[str, dict[str, float]] = {}
    for sym in symbols:
        if sym not in index:
            raise DataError(f"unknown symbol {sym!r}")
        col = panel.returns[:, index[sym]]
        stats = {
            "mean": float(col.mean()),
            "std": float(col.std(ddof=1)) if col.size > 1 else 0.0,
            "min": float(col.min()),
            "max": float(col.max()),
        }
        for name, q in _QUANTILES:
            stats[name] = float(np.percentile(col, q))
        out[sym] = stats
    return out


def write_correlation(corr: CorrelationMatrix, path, meta_path=None) -> None:
    """Square delimited matrix with symbol header row/column + JSON sidecar."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("symbol," + ",".join(corr.symbols) + "\n")
        for i, sym in enumerate(corr.symbols):
            fh.write(sym + "," + ",".join(repr(float(v)) for v in corr.values[i]) + "\n")
    meta = {
        "symbols": corr.symbols,
        "window_start": format_timestamp(corr.window.start_ms),
        "window_end": format_timestamp(corr.window.end_ms),
        "observations": corr.window.nobs,
    }
    if meta_path is None:
        meta_path = path.with_suffix(".meta.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
