"""Rolling-window network pipeline.

Each window position re-runs the static pipeline (correlation ->
similarity graph -> filter -> centralities) on the trailing slice of the
return panel, producing per-node time series, network averages and
cross-sectional percentile bands. Windows are half-open intervals
(end - width, end] with ends stamped on the hour, so adjacent windows at
step == width share no return row.

Window positions are independent work units; with threads > 1 they are
fanned out to forked worker processes and reassembled in window order, so
results are identical to a sequential run.
"""

from __future__ import annotations

import json
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import centrality as _cent
from . import filtergraph as _fg
from .corrnet import correlation_matrix, to_similarity_graph
from .errors import DataError
from .marketdata import HOUR_MS, MINUTE_MS, ReturnPanel, format_timestamp

DEFAULT_PERCENTILE_PAIRS = ((10.0, 90.0), (25.0, 75.0))


@dataclass(frozen=True)
class WindowSpec:
    """Rolling window geometry in minutes (defaults: 24-hour window, 1-hour step)."""

    width_minutes: int = 1440
    step_minutes: int = 60

    def __post_init__(self):
        if self.width_minutes <= 0 or self.step_minutes <= 0:
            raise ValueError("window width and step must be positive")
        if self.step_minutes > self.width_minutes:
            raise ValueError("step must not exceed window width")

    @classmethod
    def from_hours(cls, width_hours: float, step_hours: float) -> "WindowSpec":
        return cls(int(round(width_hours * 60)), int(round(step_hours * 60)))


@dataclass
class CentralitySeries:
    """Time-indexed centrality values plus network-level aggregates.

    values[measure] is (n_windows, n_symbols); network_average[measure] and
    efficiency are per-window scalars; bands[measure][(lo, hi)] holds the
    cross-node percentiles as an (n_windows, 2) array.
    """

    window_ends: np.ndarray
    symbols: list[str]
    values: dict[str, np.ndarray]
    network_average: dict[str, np.ndarray]
    bands: dict[str, dict[tuple[float, float], np.ndarray]]
    spec: WindowSpec
    filter_kind: str
    efficiency: np.ndarray | None = None
    percentile_pairs: tuple[tuple[float, float], ...] = DEFAULT_PERCENTILE_PAIRS
    events: list[tuple[str, str]] = field(default_factory=list)

    @property
    def n_windows(self) -> int:
        return int(self.window_ends.size)


def window_ends(panel: ReturnPanel, spec: WindowSpec) -> np.ndarray:
    """Hour-aligned window end stamps covered by the panel."""
    t0 = int(panel.timestamps[0])
    t_last = int(panel.timestamps[-1])
    width_ms = spec.width_minutes * MINUTE_MS
    step_ms = spec.step_minutes * MINUTE_MS
    anchor = -(-(t0 + width_ms) // HOUR_MS) * HOUR_MS
    if anchor > t_last:
        raise DataError(
            f"panel spans less than one {spec.width_minutes}-minute window "
            f"(first hour-aligned end {format_timestamp(anchor)} is past the grid)"
        )
    return np.arange(anchor, t_last + 1, step_ms, dtype=np.int64)


def _window_rows(panel: ReturnPanel, end_ms: int, width_ms: int) -> tuple[int, int]:
    stamps = panel.row_timestamps
    lo = int(np.searchsorted(stamps, end_ms - width_ms, side="right"))
    hi = int(np.searchsorted(stamps, end_ms, side="right"))
    return lo, hi


def window_slice(panel: ReturnPanel, spec: WindowSpec, end_ms: int) -> tuple[int, int]:
    """Row range (lo, hi) of the returns covered by the window ending at end_ms."""
    return _window_rows(panel, end_ms, spec.width_minutes * MINUTE_MS)


def compute_window(
    panel: ReturnPanel,
    row_range: tuple[int, int],
    filter_kind: str = _fg.TMFG,
    measures: tuple[str, ...] = _cent.MEASURES,
    mst_metric: str = _fg.MANTEGNA,
) -> dict[str, np.ndarray | float]:
    """One window of the pipeline; also the static-pipeline reference path."""
    corr = correlation_matrix(panel, row_range)
    dense = to_similarity_graph(corr)
    fg = _fg.tmfg(dense) if filter_kind == _fg.TMFG else _fg.mst(dense, mst_metric)
    weights = fg.graph.weights
    out: dict[str, np.ndarray | float] = {}
    if "degree" in measures:
        out["degree"] = _cent.degree_array(weights)
    if "closeness" in measures or "information" in measures:
        dist = _cent.distance_matrix_array(weights)
        base = _cent.efficiency_from_distances(dist)
        out["efficiency"] = base
        if "closeness" in measures:
            out["closeness"] = _cent.closeness_array(dist)
        if "information" in measures:
            out["information"] = _cent.information_array(weights, base)
    return out


_CTX: dict | None = None


def _run_window(index: int):
    ctx = _CTX
    return index, compute_window(
        ctx["panel"], ctx["rows"][index], ctx["filter_kind"], ctx["measures"], ctx["mst_metric"]
    )


def roll(
    panel: ReturnPanel,
    spec: WindowSpec | None = None,
    filter_kind: str = _fg.TMFG,
    measures: tuple[str, ...] = _cent.MEASURES,
    percentile_pairs: tuple[tuple[float, float], ...] = DEFAULT_PERCENTILE_PAIRS,
    mst_metric: str = _fg.MANTEGNA,
    threads: int = 1,
) -> CentralitySeries:
    """Run the pipeline over every window position of the panel."""
    spec = spec or WindowSpec()
    measures = tuple(m for m in _cent.MEASURES if m in set(measures))
    if not measures:
        raise ValueError(f"no valid measures requested; choose from {_cent.MEASURES}")
    if filter_kind not in (_fg.TMFG, _fg.MST):
        raise ValueError(f"unknown filter kind {filter_kind!r}")
    ends = window_ends(panel, spec)
    width_ms = spec.width_minutes * MINUTE_MS
    rows = [_window_rows(panel, int(e), width_ms) for e in ends]

    global _CTX
    _CTX = {
        "panel": panel,
        "rows": rows,
        "filter_kind": filter_kind,
        "measures": measures,
        "mst_metric": mst_metric,
    }
    try:
        nw = len(rows)
        results: list[dict | None] = [None] * nw
        if threads > 1 and nw > 1:
            ctx = multiprocessing.get_context("fork")
            chunk = max(1, nw // (threads * 8))
            with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
                for index, res in pool.map(_run_window, range(nw), chunksize=chunk):
                    results[index] = res
        else:
            for i in range(nw):
                results[i] = _run_window(i)[1]
    finally:
        _CTX = None

    n = panel.n_symbols
    values = {m: np.empty((nw, n)) for m in measures}
    for i, res in enumerate(results):
        for m in measures:
            values[m][i] = res[m]
    network_average = {m: values[m].mean(axis=1) for m in measures}
    eff = None
    if "efficiency" in results[0]:
        eff = np.array([res["efficiency"] for res in results])
    bands: dict[str, dict[tuple[float, float], np.ndarray]] = {}
    for m in measures:
        bands[m] = {}
        for lo, hi in percentile_pairs:
            bands[m][(lo, hi)] = np.percentile(values[m], [lo, hi], axis=1).T
    return CentralitySeries(
        window_ends=ends,
        symbols=list(panel.symbols),
        values=values,
        network_average=network_average,
        bands=bands,
        spec=spec,
        filter_kind=filter_kind,
        efficiency=eff,
        percentile_pairs=tuple(percentile_pairs),
    )


def normalize_by_network_average(series: CentralitySeries, kind: str) -> CentralitySeries:
    """Divide one measure's node series by its network average pointwise.

    The normalized network average is identically 1; percentile bands are
    recomputed on the normalized values. Fails on the first window whose
    network average is not strictly positive.
    """
    if kind not in series.values:
        raise ValueError(f"measure {kind!r} not present in series")
    avg = series.network_average[kind]
    bad = np.nonzero(avg <= 0.0)[0]
    if bad.size:
        stamp = format_timestamp(int(series.window_ends[bad[0]]))
        raise DataError(f"network average for {kind!r} is not positive at window {stamp}")
    normalized = series.values[kind] / avg[:, None]
    bands: dict[tuple[float, float], np.ndarray] = {}
    for lo, hi in series.percentile_pairs:
        bands[(lo, hi)] = np.percentile(normalized, [lo, hi], axis=1).T
    return CentralitySeries(
        window_ends=series.window_ends.copy(),
        symbols=list(series.symbols),
        values={kind: normalized},
        network_average={kind: np.ones(series.n_windows)},
        bands={kind: bands},
        spec=series.spec,
        filter_kind=series.filter_kind,
        efficiency=None,
        percentile_pairs=series.percentile_pairs,
        events=list(series.events),
    )


def average_information_series(series: CentralitySeries) -> tuple[np.ndarray, np.ndarray]:
    """(window_ends, mean information centrality per window)."""
    if "information" not in series.values:
        raise ValueError("information measure not present in series")
    return series.window_ends, series.network_average["information"]


def _pct_label(p: float) -> str:
    return f"p{p:g}"


def write_series(series: CentralitySeries, outdir, prefix: str = "series") -> list[Path]:
    """Long + wide + bands + network-average files and a JSON manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    stamps = [format_timestamp(int(t)) for t in series.window_ends]
    measures = sorted(series.values)

    long_path = outdir / f"{prefix}_long.csv"
    with open(long_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("window_end,label,measure,value\n")
        for i, stamp in enumerate(stamps):
            for m in measures:
                row = series.values[m][i]
                for j, sym in enumerate(series.symbols):
                    fh.write(f"{stamp},{sym},{m},{repr(float(row[j]))}\n")
    written.append(long_path)

    for m in measures:
        wide_path = outdir / f"{prefix}_wide_{m}.csv"
        with open(wide_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("window_end," + ",".join(series.symbols) + "\n")
            for i, stamp in enumerate(stamps):
                fh.write(stamp + "," + ",".join(repr(float(v)) for v in series.values[m][i]) + "\n")
        written.append(wide_path)

        bands_path = outdir / f"{prefix}_bands_{m}.csv"
        pairs = [p for p in series.percentile_pairs if p in series.bands.get(m, {})]
        with open(bands_path, "w", encoding="utf-8", newline="") as fh:
            cols = [f"{_pct_label(lo)},{_pct_label(hi)}" for lo, hi in pairs]
            fh.write("window_end," + ",".join(cols) + "\n")
            for i, stamp in enumerate(stamps):
                cells = []
                for pair in pairs:
                    b = series.bands[m][pair][i]
                    cells.append(f"{repr(float(b[0]))},{repr(float(b[1]))}")
                fh.write(stamp + "," + ",".join(cells) + "\n")
        written.append(bands_path)

    avg_path = outdir / f"{prefix}_network_averages.csv"
    with open(avg_path, "w", encoding="utf-8", newline="") as fh:
        header = ["window_end"] + measures + (["efficiency"] if series.efficiency is not None else [])
        fh.write(",".join(header) + "\n")
        for i, stamp in enumerate(stamps):
            cells = [repr(float(series.network_average[m][i])) for m in measures]
            if series.efficiency is not None:
                cells.append(repr(float(series.efficiency[i])))
            fh.write(stamp + "," + ",".join(cells) + "\n")
    written.append(avg_path)

    manifest = {
        "window_width_minutes": series.spec.width_minutes,
        "window_step_minutes": series.spec.step_minutes,
        "filter_kind": series.filter_kind,
        "measures": measures,
        "percentile_pairs": [list(p) for p in series.percentile_pairs],
        "symbols": series.symbols,
        "window_count": series.n_windows,
        "first_window_end": stamps[0],
        "last_window_end": stamps[-1],
        "events": [list(e) for e in series.events],
    }
    manifest_path = outdir / f"{prefix}_manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(manifest_path)
    return written
