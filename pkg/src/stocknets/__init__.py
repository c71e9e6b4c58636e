"""Correlation-based stock network analysis.

Builds Pearson correlation matrices of return/turnover panels, filters them
through random-matrix mode decomposition, constructs planar maximally
filtered graphs, and detects map-equation communities sized by PageRank.
"""

__version__ = "0.1.0"

from .community import (
    Community,
    CommunityPartition,
    FlowNetwork,
    adjusted_rand_index,
    community_report,
    detect_communities,
    flow_network,
    flow_weights,
    map_equation,
    mean_neighbor_correlation,
    pagerank,
)
from .errors import DataError, NumericalError, StocknetsError, UsageError
from .ingest import (
    SECTOR_CODES,
    ColumnSchema,
    MarketPanel,
    SeriesPanel,
    compute_returns,
    compute_turnover,
    filter_liquidity,
    load_panel,
    parse_panel,
    save_panel,
    slice_period,
)
from .pipeline import PAPER_SUBPERIODS, PipelineConfig, emit_distribution_data, run_pipeline
from .planarity import is_planar
from .pmfg import (
    EdgeCandidate,
    PlanarGraph,
    build_candidates,
    build_pmfg,
    planarity_check,
    to_weighted_adjacency,
)
from .sectormetrics import SectorCorrelationSummary, compare_methods, sector_correlations
from .spectra import (
    CorrelationSpectrum,
    ModeDecomposition,
    decompose_modes,
    eigendecompose,
    mp_bounds,
    mp_density,
    pearson_matrix,
)
from .synthetic import SyntheticSpec, generate_synthetic
