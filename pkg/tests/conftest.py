import numpy as np
import pytest

from marketnet import WeightedGraph

# 5-node example network used throughout the path-measure tests: a is the
# hub, e hangs off it, c and d reach each other fastest through a.
TOY_WEIGHTS = np.array(
    [
        [0.0, 0.5, 0.2, 0.3, 0.4],
        [0.5, 0.0, 0.1, 0.2, 0.0],
        [0.2, 0.1, 0.0, 0.0, 0.0],
        [0.3, 0.2, 0.0, 0.0, 0.0],
        [0.4, 0.0, 0.0, 0.0, 0.0],
    ]
)
TOY_LABELS = ["a", "b", "c", "d", "e"]


@pytest.fixture
def toy_graph() -> WeightedGraph:
    return WeightedGraph(list(TOY_LABELS), TOY_WEIGHTS.copy())


def make_similarity(rng: np.random.Generator, n: int, zero_fraction: float = 0.0) -> WeightedGraph:
    """Random symmetric similarity matrix in (0, 1) with optional zeroed pairs."""
    w = rng.uniform(0.01, 0.99, size=(n, n))
    w = (w + w.T) / 2.0
    if zero_fraction > 0.0:
        mask = rng.random((n, n)) < zero_fraction
        mask = mask | mask.T
        w[mask] = 0.0
    np.fill_diagonal(w, 0.0)
    labels = [f"N{i:02d}" for i in range(n)]
    return WeightedGraph(labels, w)


GRID_T0 = 1_665_878_400_000  # minute- and hour-aligned UTC instant


def panel_of(returns: np.ndarray, start_ms: int = GRID_T0):
    """Wrap a returns matrix in a ReturnPanel on a 1-minute grid."""
    from marketnet import ReturnPanel
    from marketnet.marketdata import MINUTE_MS

    rows, cols = returns.shape
    symbols = [f"S{i:03d}" for i in range(cols)]
    grid = np.arange(start_ms, start_ms + (rows + 1) * MINUTE_MS, MINUTE_MS, dtype=np.int64)
    return ReturnPanel(
        timestamps=grid,
        symbols=symbols,
        returns=returns,
        imputed=np.zeros_like(returns, dtype=bool),
        coverage={s: 1.0 for s in symbols},
    )


def factor_returns(rng: np.random.Generator, n_sym: int, n_rows: int, noise: float = 1.0) -> np.ndarray:
    """Stationary returns with a one-factor correlation structure."""
    market = rng.normal(size=n_rows)
    betas = rng.uniform(0.4, 1.2, size=n_sym)
    idio = rng.normal(size=(n_rows, n_sym)) * noise
    return (market[:, None] * betas[None, :] + idio) * 1e-3


def periodic_returns(rng: np.random.Generator, n_sym: int, period: int, repeats: int) -> np.ndarray:
    """Returns that repeat every `period` rows, so aligned windows see identical data."""
    block = factor_returns(rng, n_sym, period)
    return np.tile(block, (repeats, 1))
