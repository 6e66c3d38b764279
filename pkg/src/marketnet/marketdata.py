"""Price ingestion: parse raw trade prints, filter symbols, build return panels.

The pipeline is parse_prices -> apply_filter -> build_panel. The panel is an
aligned matrix of 1-minute log returns on a regular UTC grid, with last-tick
forward filling up to a configurable gap limit and per-symbol coverage
accounting.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, ParseError

MINUTE_MS = 60_000
HOUR_MS = 3_600_000

DEFAULT_EXCLUDE_SUBSTRINGS = ("BEAR", "BULL", "HALF", "HEDGE")
# Fiat bases commonly listed as pairs on crypto venues. Matched against the
# base token or the full symbol; extend via SymbolFilter(exclude_symbols=...).
DEFAULT_FIAT_BASES = ("EUR", "GBP", "JPY", "AUD", "CAD", "CHF", "BRL", "TRY")

_SEPARATORS = ("-", "/", "_")


def parse_timestamp_ms(token: str, mode: str) -> int:
    """Parse a timestamp token to UTC epoch milliseconds.

    mode "epoch_ms" expects an integer; "rfc3339" accepts ISO-8601 with
    'Z' or numeric offsets, naive values taken as UTC.
    """
    token = token.strip()
    if mode == "epoch_ms":
        return int(token)
    if mode != "rfc3339":
        raise ValueError(f"unknown timestamp mode: {mode!r}")
    s = token
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    if "T" not in s and " " in s:
        s = s.replace(" ", "T", 1)
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(round(dt.timestamp() * 1000))


def detect_timestamp_mode(token: str) -> str:
    t = token.strip()
    return "epoch_ms" if t.isdigit() or (t.startswith("-") and t[1:].isdigit()) else "rfc3339"


def format_timestamp(ms: int) -> str:
    """Epoch milliseconds -> ISO-8601 UTC string (millisecond precision only when needed)."""
    dt = datetime.fromtimestamp(ms // 1000, tz=timezone.utc)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    rem = ms % 1000
    return f"{base}.{rem:03d}Z" if rem else base + "Z"


@dataclass(frozen=True)
class PriceRecord:
    """One trade print: symbol, UTC timestamp (epoch ms), strictly positive price."""

    symbol: str
    timestamp_ms: int
    price: float


@dataclass
class SkipReport:
    """Counts of rows rejected during parsing, by reason."""

    bad_fields: int = 0
    bad_timestamp: int = 0
    bad_price: int = 0

    @property
    def total(self) -> int:
        return self.bad_fields + self.bad_timestamp + self.bad_price

    def as_dict(self) -> dict:
        return {
            "bad_fields": self.bad_fields,
            "bad_timestamp": self.bad_timestamp,
            "bad_price": self.bad_price,
            "total": self.total,
        }


@dataclass
class ParsedPrices:
    records: list[PriceRecord]
    skipped: SkipReport
    timestamp_mode: str = "rfc3339"


def parse_prices(source) -> ParsedPrices:
    """Parse a delimited price stream into records.

    `source` may be a path, a text stream, or a byte stream. The header must
    name `symbol`, `timestamp` and `price` columns (any order, case
    insensitive); the delimiter (comma or tab) and the timestamp encoding
    (RFC 3339 or epoch milliseconds) are detected from the file and assumed
    uniform within it. Rows with unparseable fields or non-positive prices
    are counted in the skip report, not fatal.
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return parse_prices(fh)
    raw = source.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")

    lines = raw.splitlines()
    header_idx = next((i for i, ln in enumerate(lines) if ln.strip()), None)
    if header_idx is None:
        raise ParseError("empty input: no header row")
    header_line = lines[header_idx]
    delimiter = "\t" if "\t" in header_line else ","
    header = [h.strip().lower() for h in header_line.split(delimiter)]
    positions = {}
    for name in ("symbol", "timestamp", "price"):
        if name not in header:
            raise ParseError(f"missing column {name!r} in header {header!r}")
        positions[name] = header.index(name)

    records: list[PriceRecord] = []
    skipped = SkipReport()
    ts_mode = None
    reader = csv.reader(io.StringIO("\n".join(lines[header_idx + 1 :])), delimiter=delimiter)
    needed = max(positions.values()) + 1
    for row in reader:
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) < needed:
            skipped.bad_fields += 1
            continue
        sym = row[positions["symbol"]].strip()
        ts_tok = row[positions["timestamp"]].strip()
        price_tok = row[positions["price"]].strip()
        if not sym:
            skipped.bad_fields += 1
            continue
        if ts_mode is None:
            ts_mode = detect_timestamp_mode(ts_tok)
        try:
            ts = parse_timestamp_ms(ts_tok, ts_mode)
        except (ValueError, OverflowError):
            skipped.bad_timestamp += 1
            continue
        try:
            price = float(price_tok)
        except ValueError:
            skipped.bad_price += 1
            continue
        if not math.isfinite(price) or price <= 0.0:
            skipped.bad_price += 1
            continue
        records.append(PriceRecord(sym, ts, price))
    return ParsedPrices(records, skipped, ts_mode or "rfc3339")


def split_pair(symbol: str) -> tuple[str, str]:
    """Split a trading-pair symbol into (base, quote) on its last separator.

    Symbols without a separator are treated as base-only with empty quote.
    """
    for sep in _SEPARATORS:
        pos = symbol.rfind(sep)
        if pos > 0:
            return symbol[:pos], symbol[pos + 1 :]
    return symbol, ""


@dataclass(frozen=True)
class SymbolFilter:
    """Keep symbols quoted in `quote_currency`, minus leveraged/fiat tokens.

    A symbol passes iff its quote matches, its base contains none of the
    excluded substrings, and neither the full symbol nor its base is on the
    explicit denylist.
    """

    exclude_substrings: tuple[str, ...] = DEFAULT_EXCLUDE_SUBSTRINGS
    quote_currency: str = "USD"
    exclude_symbols: tuple[str, ...] = DEFAULT_FIAT_BASES

    def passes(self, symbol: str) -> bool:
        base, quote = split_pair(symbol)
        if self.quote_currency and quote != self.quote_currency:
            return False
        upper_base = base.upper()
        if any(frag in upper_base for frag in self.exclude_substrings):
            return False
        if symbol in self.exclude_symbols or base in self.exclude_symbols:
            return False
        return True


def apply_filter(records: Sequence[PriceRecord], symbol_filter: SymbolFilter) -> list[PriceRecord]:
    """Keep only records whose symbol passes the filter; order preserved."""
    return [r for r in records if symbol_filter.passes(r.symbol)]


@dataclass
class ReturnPanel:
    """Aligned log-return matrix on a regular 1-minute UTC grid.

    `timestamps` holds the full grid (L instants); `returns` has L-1 rows,
    row t stamped at timestamps[t+1] (the interval end). `imputed` marks
    return cells where either endpoint price was missing or older than the
    gap limit; those returns are 0. `coverage` is, per symbol, the fraction
    of grid instants backed by a within-gap observed price.
    """

    timestamps: np.ndarray
    symbols: list[str]
    returns: np.ndarray
    imputed: np.ndarray
    coverage: dict[str, float] = field(default_factory=dict)
    dropped: dict[str, float] = field(default_factory=dict)  # coverage of symbols below threshold

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.returns = np.asarray(self.returns, dtype=np.float64)
        if self.timestamps.size < 2:
            raise DataError("panel grid needs at least 2 instants")
        steps = np.diff(self.timestamps)
        if not np.all(steps == MINUTE_MS):
            raise DataError("panel grid is not a regular 1-minute grid")
        if len(set(self.symbols)) != len(self.symbols):
            raise DataError("duplicate symbols in panel")
        if self.returns.shape != (self.timestamps.size - 1, len(self.symbols)):
            raise DataError(
                f"returns shape {self.returns.shape} does not match grid/symbols "
                f"({self.timestamps.size - 1} x {len(self.symbols)})"
            )
        if not np.all(np.isfinite(self.returns)):
            raise DataError("panel contains non-finite returns")

    @property
    def row_timestamps(self) -> np.ndarray:
        """Stamps of the return rows (grid minus its first instant)."""
        return self.timestamps[1:]

    @property
    def n_symbols(self) -> int:
        return len(self.symbols)


def build_panel(
    records: Sequence[PriceRecord],
    grid_start_ms: int,
    grid_end_ms: int,
    max_gap_minutes: int = 30,
    min_coverage: float = 0.5,
) -> ReturnPanel:
    """Resample trade prints to a 1-minute grid and compute log returns.

    The grid runs from grid_start_ms (rounded up to a whole minute) to
    grid_end_ms (rounded down). For each symbol and grid instant the last
    print at or before the instant is carried forward, but only while it is
    at most `max_gap_minutes` old; a return is computed as
    ln(P_t / P_{t-1}) when both endpoints carry valid prices and is 0 and
    flagged imputed otherwise. Symbols whose coverage falls below
    `min_coverage` are dropped.
    """
    if max_gap_minutes < 0:
        raise ValueError("max_gap_minutes must be >= 0")
    if not 0.0 <= min_coverage <= 1.0:
        raise ValueError("min_coverage must be within [0, 1]")
    start = int(-(-grid_start_ms // MINUTE_MS) * MINUTE_MS)
    end = int(grid_end_ms // MINUTE_MS * MINUTE_MS)
    if start >= end:
        raise DataError("grid has fewer than 2 instants")
    grid = np.arange(start, end + MINUTE_MS, MINUTE_MS, dtype=np.int64)

    by_symbol: dict[str, list[tuple[int, float]]] = {}
    for rec in records:
        by_symbol.setdefault(rec.symbol, []).append((rec.timestamp_ms, rec.price))

    max_gap_ms = max_gap_minutes * MINUTE_MS
    kept_symbols: list[str] = []
    kept_returns: list[np.ndarray] = []
    kept_imputed: list[np.ndarray] = []
    coverage: dict[str, float] = {}
    for sym in sorted(by_symbol):
        obs = by_symbol[sym]
        ts = np.array([t for t, _ in obs], dtype=np.int64)
        px = np.array([p for _, p in obs], dtype=np.float64)
        order = np.argsort(ts, kind="stable")  # equal stamps: later record wins
        ts, px = ts[order], px[order]
        idx = np.searchsorted(ts, grid, side="right") - 1
        has_obs = idx >= 0
        safe = np.maximum(idx, 0)
        valid = has_obs & (grid - ts[safe] <= max_gap_ms)
        price_at = px[safe]
        cov = float(valid.mean())
        coverage[sym] = cov
        if cov < min_coverage:
            continue
        ok = valid[1:] & valid[:-1]
        rets = np.zeros(grid.size - 1, dtype=np.float64)
        rets[ok] = np.log(price_at[1:][ok] / price_at[:-1][ok])
        kept_symbols.append(sym)
        kept_returns.append(rets)
        kept_imputed.append(~ok)

    if not kept_symbols:
        report = ", ".join(f"{s}={c:.3f}" for s, c in sorted(coverage.items()))
        raise DataError(f"all symbols below min_coverage={min_coverage}: {report}")
    returns = np.column_stack(kept_returns)
    imputed = np.column_stack(kept_imputed)
    return ReturnPanel(
        timestamps=grid,
        symbols=kept_symbols,
        returns=returns,
        imputed=imputed,
        coverage={s: coverage[s] for s in kept_symbols},
        dropped={s: c for s, c in coverage.items() if s not in set(kept_symbols)},
    )


def infer_grid_bounds(records: Iterable[PriceRecord]) -> tuple[int, int]:
    """Smallest grid bounds covering all records (minute-aligned by build_panel)."""
    ts = [r.timestamp_ms for r in records]
    if not ts:
        raise DataError("no records to infer grid bounds from")
    return min(ts), max(ts)


def write_panel(panel: ReturnPanel, path, meta_path=None, extra_meta: dict | None = None) -> None:
    """Serialize a panel: CSV of returns (rows stamped at interval ends) + JSON metadata."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("timestamp," + ",".join(panel.symbols) + "\n")
        stamps = panel.row_timestamps
        for i in range(panel.returns.shape[0]):
            row = ",".join(repr(float(v)) for v in panel.returns[i])
            fh.write(f"{format_timestamp(int(stamps[i]))},{row}\n")
    meta = {
        "grid_start": format_timestamp(int(panel.timestamps[0])),
        "grid_end": format_timestamp(int(panel.timestamps[-1])),
        "rows": int(panel.returns.shape[0]),
        "symbols": panel.symbols,
        "coverage": panel.coverage,
        "dropped": panel.dropped,
        "imputed_cells": int(panel.imputed.sum()),
    }
    if extra_meta:
        meta.update(extra_meta)
    if meta_path is None:
        meta_path = path.with_suffix(".meta.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_panel(path, meta_path=None) -> ReturnPanel:
    """Load a panel written by write_panel. Imputation flags are not persisted."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        if not cols or cols[0] != "timestamp":
            raise ParseError(f"panel file {path}: first column must be 'timestamp'")
        symbols = cols[1:]
        stamps: list[int] = []
        rows: list[list[float]] = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(cols):
                raise ParseError(f"panel file {path}: row with {len(parts)} fields, expected {len(cols)}")
            stamps.append(parse_timestamp_ms(parts[0], "rfc3339"))
            rows.append([float(v) for v in parts[1:]])
    if len(rows) < 1:
        raise DataError(f"panel file {path}: no return rows")
    grid = np.array([stamps[0] - MINUTE_MS] + stamps, dtype=np.int64)
    returns = np.array(rows, dtype=np.float64)
    coverage: dict[str, float] = {s: 1.0 for s in symbols}
    if meta_path is None:
        candidate = path.with_suffix(".meta.json")
        meta_path = candidate if candidate.exists() else None
    if meta_path is not None:
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        coverage = {s: float(meta.get("coverage", {}).get(s, 1.0)) for s in symbols}
    return ReturnPanel(
        timestamps=grid,
        symbols=symbols,
        returns=returns,
        imputed=np.zeros_like(returns, dtype=bool),
        coverage=coverage,
    )
