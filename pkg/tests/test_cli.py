import json

import numpy as np
import pytest

from conftest import GRID_T0, TOY_LABELS, TOY_WEIGHTS
from marketnet import FilteredGraph, WeightedGraph
from marketnet.cli import EXIT_DATA, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from marketnet.filtergraph import write_filtered_graph
from marketnet.marketdata import MINUTE_MS, format_timestamp


def write_price_file(path, symbols, minutes_span, seed=0):
    rng = np.random.default_rng(seed)
    lines = ["symbol,timestamp,price"]
    for sym in symbols:
        prices = 100.0 * np.exp(np.cumsum(rng.normal(0, 1e-3, minutes_span + 1)))
        for k in range(minutes_span + 1):
            stamp = format_timestamp(GRID_T0 + k * MINUTE_MS)
            lines.append(f"{sym},{stamp},{prices[k]:.10f}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def price_file(tmp_path):
    return write_price_file(
        tmp_path / "prices.csv",
        ["BTC-USD", "ETH-USD", "SOL-USD", "DOGE-USD", "ETHBULL-USD", "ADA-USDT"],
        6 * 60,
    )


def read_lines(path):
    return path.read_text(encoding="utf-8").splitlines()


class TestIngest:
    def test_fixture_roundtrip(self, tmp_path, price_file, capsys):
        out = tmp_path / "run"
        code = main(["--out", str(out), "ingest", "--input", str(price_file)])
        assert code == EXIT_OK
        header = read_lines(out / "panel.csv")[0]
        assert header == "timestamp,BTC-USD,DOGE-USD,ETH-USD,SOL-USD"
        meta = json.loads((out / "panel.meta.json").read_text())
        assert meta["rows"] == 6 * 60
        assert "coverage" in meta and meta["coverage"]["BTC-USD"] == 1.0
        printed = capsys.readouterr().out
        assert "panel: 4 symbols" in printed
        assert "coverage BTC-USD" in printed

    def test_missing_input_is_io_error_without_partial_output(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["--out", str(out), "ingest", "--input", str(tmp_path / "nope.csv")])
        assert code == EXIT_IO
        assert list(out.iterdir()) == []
        err = capsys.readouterr().err
        assert err.startswith("ERROR io:")
        assert len(err.strip().splitlines()) == 1

    def test_quote_flag_filters_pairs(self, tmp_path, price_file):
        out = tmp_path / "run"
        code = main(["--out", str(out), "ingest", "--input", str(price_file), "--quote", "USDT"])
        assert code == EXIT_OK
        assert read_lines(out / "panel.csv")[0] == "timestamp,ADA-USDT"

    def test_no_symbols_left_is_data_error(self, tmp_path, price_file, capsys):
        out = tmp_path / "run"
        code = main(["--out", str(out), "ingest", "--input", str(price_file), "--quote", "JPY"])
        assert code == EXIT_DATA
        assert capsys.readouterr().err.startswith("ERROR data:")
        assert list(out.iterdir()) == []


def ingested(tmp_path, price_file, name="ing"):
    out = tmp_path / name
    assert main(["--out", str(out), "ingest", "--input", str(price_file)]) == EXIT_OK
    return out / "panel.csv"


class TestNet:
    def test_tmfg_edge_count(self, tmp_path, price_file):
        panel = ingested(tmp_path, price_file)
        out = tmp_path / "net"
        code = main(["--out", str(out), "net", "--panel", str(panel)])
        assert code == EXIT_OK
        edges = read_lines(out / "edges.csv")
        assert edges[0] == "u,v,weight"
        assert len(edges) - 1 == 3 * (4 - 2)
        corr_header = read_lines(out / "correlation.csv")[0]
        assert corr_header.startswith("symbol,")
        meta = json.loads((out / "edges.meta.json").read_text())
        assert meta["kind"] == "tmfg"
        assert len(meta["faces"]) == 2 * 4 - 4

    def test_mst_edge_count(self, tmp_path, price_file):
        panel = ingested(tmp_path, price_file)
        out = tmp_path / "net"
        code = main(["--out", str(out), "net", "--panel", str(panel), "--filter", "mst"])
        assert code == EXIT_OK
        assert len(read_lines(out / "edges.csv")) - 1 == 4 - 1

    def test_rerun_is_byte_identical(self, tmp_path, price_file):
        panel = ingested(tmp_path, price_file)
        out = tmp_path / "net"
        main(["--out", str(out), "net", "--panel", str(panel)])
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        main(["--out", str(out), "net", "--panel", str(panel)])
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second


@pytest.fixture
def toy_edge_file(tmp_path):
    graph = WeightedGraph(list(TOY_LABELS), TOY_WEIGHTS.copy())
    edges = [(i, j) for i in range(5) for j in range(i + 1, 5) if TOY_WEIGHTS[i, j] > 0]
    fg = FilteredGraph(
        graph=graph,
        kind="tmfg",
        edges=edges,
        retained_weight=float(sum(TOY_WEIGHTS[i, j] for i, j in edges)),
        faces=[],
    )
    path = tmp_path / "toy_edges.csv"
    write_filtered_graph(fg, path)
    return path


class TestCentrality:
    def test_toy_table_matches_expected_columns(self, tmp_path, toy_edge_file):
        out = tmp_path / "cent"
        code = main(["--out", str(out), "centrality", "--graph", str(toy_edge_file)])
        assert code == EXIT_OK
        rows = read_lines(out / "centrality.csv")
        assert rows[0] == "label,degree,closeness,information"
        expected_degree = {"a": 1.00, "b": 0.75, "c": 0.50, "d": 0.50, "e": 0.25}
        expected_info = {"a": 0.85, "b": 0.45, "c": 0.25, "d": 0.33, "e": 0.39}
        for row in rows[1:]:
            label, degree, _, information = row.split(",")
            assert float(degree) == pytest.approx(expected_degree[label], abs=0.01)
            assert float(information) == pytest.approx(expected_info[label], abs=0.01)
        aggregates = json.loads((out / "aggregates.json").read_text())
        assert aggregates["efficiency"] == pytest.approx(0.24, abs=0.005)

    def test_top_flag_limits_rankings(self, tmp_path, toy_edge_file):
        out = tmp_path / "cent"
        code = main(["--out", str(out), "centrality", "--graph", str(toy_edge_file), "--top", "3"])
        assert code == EXIT_OK
        for measure in ("degree", "closeness", "information"):
            rows = read_lines(out / f"ranking_{measure}.csv")
            assert rows[0] == "rank,label,value"
            assert len(rows) - 1 == 3
        info_rows = read_lines(out / "ranking_information.csv")[1:]
        assert [r.split(",")[1] for r in info_rows] == ["a", "b", "e"]


class TestRollCommand:
    @pytest.fixture
    def long_price_file(self, tmp_path):
        return write_price_file(tmp_path / "long.csv", ["A-USD", "B-USD", "C-USD", "D-USD"], 48 * 60, seed=1)

    def test_48h_fixture_gives_25_windows(self, tmp_path, long_price_file):
        panel = ingested(tmp_path, long_price_file)
        out = tmp_path / "roll"
        code = main(["--out", str(out), "roll", "--panel", str(panel)])
        assert code == EXIT_OK
        wide = read_lines(out / "series_wide_closeness.csv")
        assert len(wide) - 1 == 25
        long_rows = read_lines(out / "series_long.csv")
        assert len(long_rows) - 1 == 25 * 4 * 3
        manifest = json.loads((out / "series_manifest.json").read_text())
        assert manifest["window_count"] == 25
        assert manifest["filter_kind"] == "tmfg"

    def test_rerun_byte_identical(self, tmp_path, long_price_file):
        panel = ingested(tmp_path, long_price_file)
        out = tmp_path / "roll"
        main(["--out", str(out), "roll", "--panel", str(panel), "--measures", "closeness"])
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        main(["--out", str(out), "roll", "--panel", str(panel), "--measures", "closeness"])
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second

    def test_normalize_emits_unit_average(self, tmp_path, long_price_file):
        panel = ingested(tmp_path, long_price_file)
        out = tmp_path / "roll"
        code = main(["--out", str(out), "roll", "--panel", str(panel),
                     "--measures", "closeness", "--normalize"])
        assert code == EXIT_OK
        rows = read_lines(out / "normalized_closeness_network_averages.csv")
        assert rows[0] == "window_end,closeness"
        for row in rows[1:]:
            assert float(row.split(",")[1]) == 1.0

    def test_events_passthrough(self, tmp_path, long_price_file):
        panel = ingested(tmp_path, long_price_file)
        events = tmp_path / "events.csv"
        events.write_text("timestamp,label\n2022-10-16T12:00:00Z,halt\n", encoding="utf-8")
        out = tmp_path / "roll"
        code = main(["--out", str(out), "roll", "--panel", str(panel),
                     "--measures", "degree", "--events", str(events)])
        assert code == EXIT_OK
        manifest = json.loads((out / "series_manifest.json").read_text())
        assert manifest["events"] == [["2022-10-16T12:00:00Z", "halt"]]

    def test_unknown_measure_is_usage_error(self, tmp_path, long_price_file, capsys):
        panel = ingested(tmp_path, long_price_file)
        out = tmp_path / "roll"
        code = main(["--out", str(out), "roll", "--panel", str(panel), "--measures", "entropy"])
        assert code == EXIT_USAGE
        assert capsys.readouterr().err.startswith("ERROR usage:")
        assert list(out.iterdir()) == []


class TestConfigAndHelp:
    def test_config_file_supplies_defaults_flags_override(self, tmp_path, price_file):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"quote": "USDT", "min_coverage": 0.1}), encoding="utf-8")
        out1 = tmp_path / "r1"
        assert main(["--config", str(cfg), "--out", str(out1),
                     "ingest", "--input", str(price_file)]) == EXIT_OK
        assert read_lines(out1 / "panel.csv")[0] == "timestamp,ADA-USDT"
        out2 = tmp_path / "r2"
        assert main(["--config", str(cfg), "--out", str(out2),
                     "ingest", "--input", str(price_file), "--quote", "USD"]) == EXIT_OK
        assert "BTC-USD" in read_lines(out2 / "panel.csv")[0]

    def test_key_value_config_format(self, tmp_path, price_file):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("quote = USDT  # focus on tether pairs\nmin_coverage = 0.2\n", encoding="utf-8")
        out = tmp_path / "r"
        assert main(["--config", str(cfg), "--out", str(out),
                     "ingest", "--input", str(price_file)]) == EXIT_OK
        assert read_lines(out / "panel.csv")[0] == "timestamp,ADA-USDT"

    def test_manifest_captures_resolved_config(self, tmp_path, price_file):
        out = tmp_path / "r"
        main(["--out", str(out), "ingest", "--input", str(price_file), "--max-gap", "7"])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "ingest"
        assert manifest["max_gap"] == 7
        assert manifest["quote"] == "USD"

    def test_help_enumerates_flags(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--config", "--out", "--threads", "--log-level"):
            assert flag in text
        for cmd in ("ingest", "net", "centrality", "roll"):
            assert cmd in text

    def test_subcommand_help_covers_flags(self, capsys):
        with pytest.raises(SystemExit):
            main(["roll", "--help"])
        text = capsys.readouterr().out
        for flag in ("--panel", "--filter", "--metric", "--width", "--step",
                     "--measures", "--percentiles", "--normalize", "--events"):
            assert flag in text
