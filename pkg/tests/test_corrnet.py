import numpy as np
import pytest

import oracles
from conftest import TOY_LABELS, TOY_WEIGHTS
from marketnet import (
    CorrelationMatrix,
    DataError,
    ReturnPanel,
    correlation_matrix,
    summary_stats,
    to_similarity_graph,
    top_correlations,
)
from marketnet.corrnet import ObservationWindow
from marketnet.marketdata import MINUTE_MS

T0 = 1_665_878_400_000  # an arbitrary minute-aligned UTC instant


def panel_from(returns: np.ndarray, symbols=None) -> ReturnPanel:
    rows, cols = returns.shape
    symbols = symbols or [f"S{i:02d}" for i in range(cols)]
    grid = np.arange(T0, T0 + (rows + 1) * MINUTE_MS, MINUTE_MS, dtype=np.int64)
    return ReturnPanel(
        timestamps=grid,
        symbols=symbols,
        returns=returns,
        imputed=np.zeros_like(returns, dtype=bool),
        coverage={s: 1.0 for s in symbols},
    )


def corr_of(values: np.ndarray, symbols) -> CorrelationMatrix:
    return CorrelationMatrix(list(symbols), values, ObservationWindow(T0, T0 + MINUTE_MS, 3))


class TestCorrelationMatrix:
    def test_perfect_linear_dependence(self):
        x = np.linspace(-1, 1, 50)
        panel = panel_from(np.column_stack([x, 2 * x]))
        corr = correlation_matrix(panel)
        assert corr.values[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_negation_gives_minus_one(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=40)
        corr = correlation_matrix(panel_from(np.column_stack([x, -x])))
        assert corr.values[0, 1] == pytest.approx(-1.0, abs=1e-12)

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(100, 5)) @ rng.normal(size=(5, 5))
        corr = correlation_matrix(panel_from(x))
        expected = oracles.pearson_two_pass(x)
        assert np.abs(corr.values - expected).max() < 1e-12

    def test_zero_variance_column(self, caplog):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(30, 3))
        x[:, 1] = 7.0
        corr = correlation_matrix(panel_from(x))
        assert corr.values[1, 1] == 1.0
        assert corr.values[0, 1] == 0.0
        assert corr.values[1, 2] == 0.0

    def test_too_few_rows_fatal(self):
        x = np.zeros((5, 2))
        with pytest.raises(DataError, match="at least 3"):
            correlation_matrix(panel_from(x), row_range=(0, 2))

    def test_single_symbol_fatal(self):
        with pytest.raises(DataError, match="2 symbols"):
            correlation_matrix(panel_from(np.zeros((10, 1))))

    def test_affine_rescaling_invariance(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(80, 4))
        base = correlation_matrix(panel_from(x)).values
        y = x.copy()
        y[:, 0] = 3.7 * y[:, 0] + 11.0
        y[:, 2] = 0.004 * y[:, 2] - 5.0
        scaled = correlation_matrix(panel_from(y)).values
        assert np.abs(base - scaled).max() < 1e-9

    def test_row_range_selects_window(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(60, 3))
        whole = correlation_matrix(panel_from(x), row_range=(10, 40))
        direct = correlation_matrix(panel_from(x[10:40]))
        assert np.array_equal(whole.values, direct.values)
        assert whole.window.nobs == 30

    def test_label_equivariance(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(50, 4))
        symbols = ["W", "X", "Y", "Z"]
        corr = correlation_matrix(panel_from(x, symbols))
        perm = [2, 0, 3, 1]
        corr_p = correlation_matrix(panel_from(x[:, perm], [symbols[i] for i in perm]))
        assert np.abs(corr_p.values - corr.values[np.ix_(perm, perm)]).max() < 1e-12


class TestSimilarityGraph:
    def test_absolute_value(self):
        values = np.array([[1.0, -0.8], [-0.8, 1.0]])
        g = to_similarity_graph(corr_of(values, ["A", "B"]))
        assert g.weights[0, 1] == 0.8
        assert g.weights[0, 0] == 0.0

    def test_identity_matrix_gives_edgeless_graph(self):
        g = to_similarity_graph(corr_of(np.eye(4), list("ABCD")))
        assert g.edge_count() == 0

    def test_toy_matrix_roundtrips_unchanged(self):
        # already non-negative with zero diagonal, so only the diagonal=1
        # bookkeeping of the correlation container changes anything
        values = TOY_WEIGHTS + np.eye(5)
        g = to_similarity_graph(corr_of(values, TOY_LABELS))
        assert np.array_equal(g.weights, TOY_WEIGHTS)
        assert g.labels == TOY_LABELS

    def test_satisfies_graph_invariants_on_random_input(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            x = rng.normal(size=(30, 6))
            g = to_similarity_graph(correlation_matrix(panel_from(x)))
            assert np.array_equal(g.weights, g.weights.T)
            assert (g.weights >= 0).all()
            assert np.diag(g.weights).sum() == 0.0


class TestTopCorrelations:
    def test_simple_ordering(self):
        values = np.eye(3)
        values[0, 1] = values[1, 0] = 0.9
        values[0, 2] = values[2, 0] = 0.5
        values[1, 2] = values[2, 1] = 0.1
        out = top_correlations(corr_of(values, list("ABC")), 2)
        assert out == [("A", "B", 0.9), ("A", "C", 0.5)]

    def test_k_one_returns_global_max(self):
        rng = np.random.default_rng(7)
        m = rng.uniform(-1, 1, (6, 6))
        values = np.clip((m + m.T) / 2, -1, 1)
        np.fill_diagonal(values, 1.0)
        corr = corr_of(values, [f"S{i}" for i in range(6)])
        (sym_a, sym_b, coeff), = top_correlations(corr, 1)
        iu = np.triu_indices(6, 1)
        assert coeff == pytest.approx(values[iu].max(), abs=0)

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(8)
        m = rng.uniform(-1, 1, (10, 10))
        values = np.clip((m + m.T) / 2, -1, 1)
        np.fill_diagonal(values, 1.0)
        symbols = [f"S{i:02d}" for i in range(10)]
        corr = corr_of(values, symbols)
        everything = []
        for i in range(10):
            for j in range(i + 1, 10):
                everything.append((symbols[i], symbols[j], values[i, j]))
        everything.sort(key=lambda t: (-t[2], t[0], t[1]))
        assert top_correlations(corr, 45) == everything
        assert top_correlations(corr, 12) == everything[:12]

    def test_k_beyond_pair_count_returns_all(self):
        out = top_correlations(corr_of(np.eye(3), list("ABC")), 100)
        assert len(out) == 3

    def test_ties_break_lexicographically(self):
        values = np.eye(3)
        values[0, 1] = values[1, 0] = 0.5
        values[0, 2] = values[2, 0] = 0.5
        values[1, 2] = values[2, 1] = 0.5
        out = top_correlations(corr_of(values, ["C", "B", "A"]), 3)
        assert out == [("A", "B", 0.5), ("A", "C", 0.5), ("B", "C", 0.5)]


class TestSummaryStats:
    def test_constant_zero_returns(self):
        panel = panel_from(np.zeros((20, 2)))
        stats = summary_stats(panel, ["S00"])["S00"]
        assert all(v == 0.0 for v in stats.values())

    def test_simple_three_point_sample(self):
        panel = panel_from(np.array([[-1.0], [0.0], [1.0]]), ["A"])
        stats = summary_stats(panel, ["A"])["A"]
        assert stats["mean"] == 0.0
        assert stats["median"] == 0.0
        assert stats["min"] == -1.0
        assert stats["max"] == 1.0
        assert stats["Q1"] == -0.5
        assert stats["Q3"] == 0.5

    def test_quantiles_match_rank_oracle(self):
        rng = np.random.default_rng(9)
        x = rng.normal(0, 0.01, size=(500, 1))
        stats = summary_stats(panel_from(x, ["A"]), ["A"])["A"]
        col = x[:, 0]
        assert stats["Q1"] == pytest.approx(oracles.quantile_by_rank(col, 0.25), abs=1e-9)
        assert stats["median"] == pytest.approx(oracles.quantile_by_rank(col, 0.50), abs=1e-9)
        assert stats["Q3"] == pytest.approx(oracles.quantile_by_rank(col, 0.75), abs=1e-9)
        assert stats["std"] == pytest.approx(
            float(np.sqrt(((col - col.mean()) ** 2).sum() / (col.size - 1))), abs=1e-12
        )

    def test_unknown_symbol_fatal(self):
        panel = panel_from(np.zeros((5, 1)))
        with pytest.raises(DataError, match="GHOST"):
            summary_stats(panel, ["GHOST"])
