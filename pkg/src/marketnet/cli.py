"""Command-line pipeline: ingest -> net -> centrality, plus rolling analysis.

Every run writes into one output directory together with a manifest of the
fully resolved configuration. Failures remove partial outputs and report a
single machine-parsable line `ERROR <code>: <message>` on stderr.

Exit codes: 0 ok, 2 usage, 3 I/O, 4 parse, 5 data.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import centrality as cent
from . import corrnet, filtergraph, marketdata, rolling
from .errors import DataError, ParseError, ToolError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_DATA = 5

_DEFAULTS = {
    "quote": "USD",
    "exclude_substr": list(marketdata.DEFAULT_EXCLUDE_SUBSTRINGS),
    "exclude_symbol": list(marketdata.DEFAULT_FIAT_BASES),
    "max_gap": 30,
    "min_coverage": 0.5,
    "filter": filtergraph.TMFG,
    "metric": filtergraph.MANTEGNA,
    "top": 20,
    "width": 1440,
    "step": 60,
    "measures": "degree,closeness,information",
    "percentiles": "10:90,25:75",
    "threads": 0,  # 0 -> number of processors
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marketnet",
        description="Correlation-network analysis: filtered graphs and path-based centralities.",
    )
    parser.add_argument("--config", help="JSON or key=value config file; flags override it")
    parser.add_argument("--out", help="output directory for this run (default: ./marketnet-out/<command>)")
    parser.add_argument("--threads", type=int, help="worker processes for rolling windows (default: all processors)")
    parser.add_argument("--log-level", default="warning", choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)

    p_ing = sub.add_parser("ingest", help="parse price files into an aligned return panel")
    p_ing.add_argument("--input", action="append", help="price CSV/TSV file (symbol,timestamp,price); repeatable")
    p_ing.add_argument("--quote", help="required quote currency of kept pairs (default USD)")
    p_ing.add_argument("--exclude-substr", action="append", help="excluded base-token fragment; repeatable")
    p_ing.add_argument("--exclude-symbol", action="append", help="denylisted symbol or base; repeatable")
    p_ing.add_argument("--start", help="grid start (RFC 3339; default: first record)")
    p_ing.add_argument("--end", help="grid end (RFC 3339; default: last record)")
    p_ing.add_argument("--max-gap", type=int, help="forward-fill limit in minutes (default 30)")
    p_ing.add_argument("--min-coverage", type=float, help="drop symbols below this coverage (default 0.5)")

    p_net = sub.add_parser("net", help="correlation matrix and filtered graph from a panel")
    p_net.add_argument("--panel", help="panel CSV written by ingest")
    p_net.add_argument("--filter", choices=[filtergraph.TMFG, filtergraph.MST], help="filter kind (default tmfg)")
    p_net.add_argument("--metric", choices=[filtergraph.MANTEGNA, filtergraph.INVERSE_WEIGHT],
                       help="MST distance metric (default mantegna)")

    p_cen = sub.add_parser("centrality", help="centrality table and rankings for a filtered graph")
    p_cen.add_argument("--graph", help="edge list CSV written by net")
    p_cen.add_argument("--top", type=int, help="ranking depth (default 20)")

    p_roll = sub.add_parser("roll", help="rolling-window centrality series from a panel")
    p_roll.add_argument("--panel", help="panel CSV written by ingest")
    p_roll.add_argument("--filter", choices=[filtergraph.TMFG, filtergraph.MST], help="filter kind (default tmfg)")
    p_roll.add_argument("--metric", choices=[filtergraph.MANTEGNA, filtergraph.INVERSE_WEIGHT],
                        help="MST distance metric (default mantegna)")
    p_roll.add_argument("--width", type=int, help="window width in minutes (default 1440)")
    p_roll.add_argument("--step", type=int, help="window step in minutes (default 60)")
    p_roll.add_argument("--measures", help="comma list of degree,closeness,information (default all)")
    p_roll.add_argument("--percentiles", help="band pairs like '10:90,25:75'")
    p_roll.add_argument("--normalize", action="store_true", default=None,
                        help="also write series normalized by the network average")
    p_roll.add_argument("--events", help="events CSV (timestamp,label) passed through into the manifest")
    return parser


def _load_config_file(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        cfg = json.loads(text)
        if not isinstance(cfg, dict):
            raise ParseError(f"config file {path}: expected a JSON object")
        return cfg
    except json.JSONDecodeError:
        pass
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"config file {path} line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            cfg[key] = json.loads(value)
        except json.JSONDecodeError:
            cfg[key] = value.strip("\"'")
    return cfg


def resolve_config(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags."""
    file_cfg = _load_config_file(args.config) if args.config else {}
    resolved = {"command": args.command}
    for key, value in vars(args).items():
        if key in ("config", "command"):
            continue
        name = key
        if value is None:
            value = file_cfg.get(name, _DEFAULTS.get(name))
        resolved[name] = value
    if resolved.get("out") is None:
        resolved["out"] = str(Path("marketnet-out") / args.command)
    if not resolved.get("threads"):
        resolved["threads"] = os.cpu_count() or 1
    return resolved


class _RunDir:
    """Tracks files written during a run so failures leave no partial output."""

    def __init__(self, outdir: Path):
        self.outdir = outdir
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.outdir / name
        self.written.append(p)
        return p

    def track(self, paths) -> None:
        self.written.extend(Path(p) for p in paths)

    def cleanup(self) -> None:
        for p in self.written:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _write_manifest(run: _RunDir, cfg: dict) -> None:
    with open(run.path("manifest.json"), "w", encoding="utf-8") as fh:
        json.dump({k: v for k, v in sorted(cfg.items())}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(cfg: dict, key: str) -> str:
    if not cfg.get(key):
        raise ValueError(f"missing required setting --{key.replace('_', '-')}")
    return cfg[key]


def cmd_ingest(cfg: dict, run: _RunDir) -> None:
    inputs = cfg.get("input") or []
    if isinstance(inputs, str):
        inputs = [inputs]
    if not inputs:
        raise ValueError("missing required setting --input")
    records = []
    skipped = marketdata.SkipReport()
    for path in inputs:
        parsed = marketdata.parse_prices(path)
        records.extend(parsed.records)
        skipped.bad_fields += parsed.skipped.bad_fields
        skipped.bad_timestamp += parsed.skipped.bad_timestamp
        skipped.bad_price += parsed.skipped.bad_price
    symbol_filter = marketdata.SymbolFilter(
        exclude_substrings=tuple(cfg["exclude_substr"]),
        quote_currency=cfg["quote"],
        exclude_symbols=tuple(cfg["exclude_symbol"]),
    )
    kept = marketdata.apply_filter(records, symbol_filter)
    if not kept:
        raise DataError("no records left after symbol filtering")
    if cfg.get("start"):
        start = marketdata.parse_timestamp_ms(cfg["start"], "rfc3339")
    else:
        start = min(r.timestamp_ms for r in kept)
    if cfg.get("end"):
        end = marketdata.parse_timestamp_ms(cfg["end"], "rfc3339")
    else:
        end = max(r.timestamp_ms for r in kept)
    panel = marketdata.build_panel(kept, start, end, cfg["max_gap"], cfg["min_coverage"])
    marketdata.write_panel(
        panel,
        run.path("panel.csv"),
        run.path("panel.meta.json"),
        extra_meta={"skipped_rows": skipped.as_dict()},
    )
    print(f"panel: {panel.n_symbols} symbols x {panel.returns.shape[0]} return rows")
    print(f"skipped rows: {skipped.as_dict()}")
    if panel.dropped:
        listing = ", ".join(f"{s} ({c:.3f})" for s, c in sorted(panel.dropped.items()))
        print(f"dropped below coverage {cfg['min_coverage']}: {listing}")
    for sym in panel.symbols:
        print(f"coverage {sym}: {panel.coverage[sym]:.4f}")


def cmd_net(cfg: dict, run: _RunDir) -> None:
    panel = marketdata.read_panel(_require(cfg, "panel"))
    corr = corrnet.correlation_matrix(panel)
    corrnet.write_correlation(corr, run.path("correlation.csv"), run.path("correlation.meta.json"))
    dense = corrnet.to_similarity_graph(corr)
    summary = {
        "n": dense.n,
        "positive_weight_pairs": dense.edge_count(),
        "mean_weight": float(dense.weights.sum() / (dense.n * (dense.n - 1))),
        "max_weight": float(dense.weights.max()) if dense.n else 0.0,
    }
    with open(run.path("similarity_summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if cfg["filter"] == filtergraph.TMFG:
        fg = filtergraph.tmfg(dense)
    else:
        fg = filtergraph.mst(dense, cfg["metric"])
    filtergraph.write_filtered_graph(fg, run.path("edges.csv"), run.path("edges.meta.json"))
    print(f"{fg.kind} on {fg.n} nodes: {len(fg.edges)} edges, retained weight {fg.retained_weight:.6f}")


def cmd_centrality(cfg: dict, run: _RunDir) -> None:
    fg = filtergraph.read_filtered_graph(_require(cfg, "graph"))
    records, aggregates = cent.centrality_table(fg)
    cent.write_centrality(records, run.path("centrality.csv"))
    top = int(cfg["top"])
    for measure in cent.MEASURES:
        values = {r.label: getattr(r, measure) for r in records}
        ranked = cent.ranking(values, top)
        with open(run.path(f"ranking_{measure}.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write("rank,label,value\n")
            for pos, (lab, val) in enumerate(ranked, 1):
                fh.write(f"{pos},{lab},{repr(val)}\n")
    with open(run.path("aggregates.json"), "w", encoding="utf-8") as fh:
        json.dump(aggregates, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"centrality table for {fg.n} nodes written; efficiency {aggregates['efficiency']:.6f}")


def _parse_percentiles(text: str) -> tuple[tuple[float, float], ...]:
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        lo, _, hi = chunk.partition(":")
        try:
            pair = (float(lo), float(hi))
        except ValueError as exc:
            raise ValueError(f"bad percentile pair {chunk!r}; expected LO:HI") from exc
        if not 0 <= pair[0] <= pair[1] <= 100:
            raise ValueError(f"bad percentile pair {chunk!r}; need 0 <= lo <= hi <= 100")
        pairs.append(pair)
    if not pairs:
        raise ValueError("no percentile pairs given")
    return tuple(pairs)


def _read_events(path: str) -> list[tuple[str, str]]:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.lower().startswith("timestamp"):
                continue
            stamp, _, label = line.partition(",")
            marketdata.parse_timestamp_ms(stamp, "rfc3339")  # validate only
            events.append((stamp, label))
    return events


def cmd_roll(cfg: dict, run: _RunDir) -> None:
    panel = marketdata.read_panel(_require(cfg, "panel"))
    spec = rolling.WindowSpec(int(cfg["width"]), int(cfg["step"]))
    measures = tuple(m.strip() for m in cfg["measures"].split(",") if m.strip())
    unknown = set(measures) - set(cent.MEASURES)
    if unknown:
        raise ValueError(f"unknown measures: {', '.join(sorted(unknown))}")
    series = rolling.roll(
        panel,
        spec,
        filter_kind=cfg["filter"],
        measures=measures,
        percentile_pairs=_parse_percentiles(cfg["percentiles"]),
        mst_metric=cfg["metric"],
        threads=int(cfg["threads"]),
    )
    if cfg.get("events"):
        series.events = _read_events(cfg["events"])
    run.track(rolling.write_series(series, run.outdir, prefix="series"))
    if cfg.get("normalize"):
        for measure in sorted(series.values):
            normalized = rolling.normalize_by_network_average(series, measure)
            run.track(rolling.write_series(normalized, run.outdir, prefix=f"normalized_{measure}"))
    print(f"rolling series: {series.n_windows} windows x {len(series.symbols)} symbols "
          f"({', '.join(sorted(series.values))})")


_COMMANDS = {
    "ingest": cmd_ingest,
    "net": cmd_net,
    "centrality": cmd_centrality,
    "roll": cmd_roll,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper()))
    run = None
    try:
        cfg = resolve_config(args)
        outdir = Path(cfg["out"])
        outdir.mkdir(parents=True, exist_ok=True)
        run = _RunDir(outdir)
        _write_manifest(run, cfg)
        _COMMANDS[args.command](cfg, run)
        return EXIT_OK
    except ValueError as exc:
        if run:
            run.cleanup()
        print(f"ERROR usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        if run:
            run.cleanup()
        print(f"ERROR parse: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ToolError as exc:
        if run:
            run.cleanup()
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        if run:
            run.cleanup()
        print(f"ERROR io: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
