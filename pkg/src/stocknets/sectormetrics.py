"""Average and summed correlations inside and between sectors over PMFG edges.

Sums run over graph edges only, partitioned by whether both endpoints share
a GICS code; the SH overlay is excluded from the partition so every edge is
counted exactly once.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DataError
from .ingest import SeriesPanel
from .pmfg import METHODS, PlanarGraph, build_candidates, build_pmfg
from .spectra import decompose_modes, eigendecompose, pearson_matrix

BASIS_SECTOR = "sector_mode"
BASIS_RAW = "raw"


@dataclass
class SectorCorrelationSummary:
    """Intra/inter-sector edge sums and averages for one (method, basis)."""

    basis: str
    method: str
    avg_in: float | None
    avg_between: float | None
    sum_in: float
    sum_between: float
    n_in_edges: int
    n_between_edges: int


def sector_correlations(
    graph: PlanarGraph,
    matrix: np.ndarray,
    sector_map: dict[str, tuple[str, bool]],
    basis: str = BASIS_SECTOR,
) -> SectorCorrelationSummary:
    """Partition PMFG edges into same-sector and cross-sector sums."""
    if graph.tickers is None:
        raise DataError("graph has no tickers; sector partition needs the sector map")
    if matrix.shape != (graph.n, graph.n):
        raise DataError(f"matrix shape {matrix.shape} does not match graph n={graph.n}")
    missing = [t for t in graph.tickers if t not in sector_map]
    if missing:
        raise DataError(f"tickers without sector label: {missing[:5]}")
    codes = [sector_map[t][0] for t in graph.tickers]
    sum_in = sum_be = 0.0
    n_in = n_be = 0
    for i, j, _ in graph.edges:
        v = float(matrix[i, j])
        if codes[i] == codes[j]:
            sum_in += v
            n_in += 1
        else:
            sum_be += v
            n_be += 1
    return SectorCorrelationSummary(
        basis=basis,
        method=graph.method,
        avg_in=sum_in / n_in if n_in else None,
        avg_between=sum_be / n_be if n_be else None,
        sum_in=sum_in,
        sum_between=sum_be,
        n_in_edges=n_in,
        n_between_edges=n_be,
    )


def compare_methods(
    series: SeriesPanel,
    sector_map: dict[str, tuple[str, bool]],
    rmt_multiplier: float = 1.0,
) -> list[SectorCorrelationSummary]:
    """Full spectra -> PMFG -> sector-metrics grid over both construction
    methods and both value bases (sector mode and raw correlations)."""
    spectrum = eigendecompose(pearson_matrix(series))
    modes = decompose_modes(spectrum, rmt_multiplier)
    out = []
    for method in METHODS:
        cands = build_candidates(modes.sector, method)
        graph = build_pmfg(cands, spectrum.n, method=method, tickers=list(series.tickers))
        out.append(sector_correlations(graph, modes.sector, sector_map, BASIS_SECTOR))
        out.append(sector_correlations(graph, spectrum.corr, sector_map, BASIS_RAW))
    return out


def write_sector_summary_csv(
    summaries: list[SectorCorrelationSummary],
    path: Union[str, Path],
    kind: str | None = None,
) -> None:
    """Wide CSV: one row per method, stat columns for each value basis."""
    methods = []
    by_key: dict[tuple[str, str], SectorCorrelationSummary] = {}
    for s in summaries:
        if s.method not in methods:
            methods.append(s.method)
        by_key[(s.method, s.basis)] = s

    def fmt(value) -> str:
        return "" if value is None else f"{value:.6f}"

    stats = ("avg_in", "avg_between", "sum_in", "sum_between")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = ["kind", "method", "n_in_edges", "n_between_edges"]
        for basis in (BASIS_SECTOR, BASIS_RAW):
            header += [f"{stat}_{basis}" for stat in stats]
        writer.writerow(header)
        for method in methods:
            any_summary = by_key.get((method, BASIS_SECTOR)) or by_key.get((method, BASIS_RAW))
            row = [kind or "", method, any_summary.n_in_edges, any_summary.n_between_edges]
            for basis in (BASIS_SECTOR, BASIS_RAW):
                s = by_key.get((method, basis))
                if s is None:
                    row += [""] * 4
                else:
                    row += [fmt(s.avg_in), fmt(s.avg_between),
                            fmt(s.sum_in), fmt(s.sum_between)]
            writer.writerow(row)
