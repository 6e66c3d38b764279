"""Correlation-network analysis for asset price series.

Pipeline: ingest prices into aligned log-return panels, estimate Pearson
correlation matrices, filter them into sparse information networks (TMFG or
MST), and compute path-based centralities, statically or over rolling
windows.
"""

from .centrality import (
    CentralityRecord,
    DistanceMatrix,
    average_information_centrality,
    centrality_table,
    closeness_centrality,
    deactivation_efficiencies,
    degree_centrality,
    efficiency,
    information_centrality,
    ranking,
    shortest_paths,
)
from .corrnet import (
    CorrelationMatrix,
    WeightedGraph,
    correlation_matrix,
    summary_stats,
    to_similarity_graph,
    top_correlations,
)
from .errors import DataError, ParseError, ToolError
from .filtergraph import FilteredGraph, mst, planarity_certificate, tmfg
from .marketdata import (
    PriceRecord,
    ReturnPanel,
    SymbolFilter,
    apply_filter,
    build_panel,
    parse_prices,
    read_panel,
    write_panel,
)
from .rolling import (
    CentralitySeries,
    WindowSpec,
    average_information_series,
    normalize_by_network_average,
    roll,
)

__version__ = "0.1.0"

__all__ = [
    "CentralityRecord",
    "CentralitySeries",
    "CorrelationMatrix",
    "DataError",
    "DistanceMatrix",
    "FilteredGraph",
    "ParseError",
    "PriceRecord",
    "ReturnPanel",
    "SymbolFilter",
    "ToolError",
    "WeightedGraph",
    "WindowSpec",
    "apply_filter",
    "average_information_centrality",
    "average_information_series",
    "build_panel",
    "centrality_table",
    "closeness_centrality",
    "correlation_matrix",
    "deactivation_efficiencies",
    "degree_centrality",
    "efficiency",
    "information_centrality",
    "mst",
    "normalize_by_network_average",
    "parse_prices",
    "planarity_certificate",
    "ranking",
    "read_panel",
    "roll",
    "shortest_paths",
    "summary_stats",
    "tmfg",
    "to_similarity_graph",
    "top_correlations",
    "write_panel",
]
