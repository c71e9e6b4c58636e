"""Intra/inter-sector correlation sums over PMFG edges."""

import csv

import numpy as np
import pytest

from stocknets.errors import DataError
from stocknets.pmfg import METHOD_DISTANCE, PlanarGraph, build_candidates, build_pmfg
from stocknets.sectormetrics import (
    BASIS_RAW,
    BASIS_SECTOR,
    compare_methods,
    sector_correlations,
    write_sector_summary_csv,
)
from stocknets.synthetic import SyntheticSpec, generate_synthetic
from stocknets.ingest import compute_returns


def graph_from_edges(n, weighted_edges, tickers=None):
    adjacency = [[] for _ in range(n)]
    for i, j, _ in weighted_edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    return PlanarGraph(n=n, edges=list(weighted_edges), adjacency=adjacency,
                       construction_log=[], method=METHOD_DISTANCE,
                       tickers=tickers or [f"T{i}" for i in range(n)])


def matrix_from(weighted_edges, n):
    m = np.zeros((n, n))
    for i, j, w in weighted_edges:
        m[i, j] = m[j, i] = w
    return m


def test_single_sector_degenerate_partition():
    edges = [(0, 1, 0.4), (1, 2, 0.2), (0, 2, 0.1)]
    g = graph_from_edges(3, edges)
    m = matrix_from(edges, 3)
    sector_map = {t: ("EN", False) for t in g.tickers}
    s = sector_correlations(g, m, sector_map)
    assert s.n_between_edges == 0
    assert s.avg_between is None  # undefined marker, not zero
    assert s.sum_in == pytest.approx(0.7)
    assert s.n_in_edges == 3


def test_constant_matrix_averages():
    edges = [(0, 1, 0.0), (1, 2, 0.0), (2, 3, 0.0), (0, 3, 0.0), (0, 2, 0.0)]
    g = graph_from_edges(4, edges)
    m = np.full((4, 4), 0.37)
    sector_map = {"T0": ("EN", False), "T1": ("EN", False),
                  "T2": ("BA", False), "T3": ("BA", False)}
    s = sector_correlations(g, m, sector_map)
    assert s.avg_in == pytest.approx(0.37)
    assert s.avg_between == pytest.approx(0.37)


def test_six_node_two_sector_enumeration_oracle():
    rng = np.random.default_rng(0)
    spec_edges = []
    n = 6
    # hand-built planar graph (two triangles plus bridge) with random weights
    pairs = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]
    for i, j in pairs:
        spec_edges.append((i, j, float(rng.uniform(-0.5, 0.9))))
    g = graph_from_edges(n, spec_edges)
    m = matrix_from(spec_edges, n)
    sector_map = {f"T{i}": ("EN" if i < 3 else "BA", i == 0) for i in range(n)}
    s = sector_correlations(g, m, sector_map)
    in_sum = be_sum = 0.0
    in_n = be_n = 0
    for i, j, w in spec_edges:
        same = (i < 3) == (j < 3)
        if same:
            in_sum += w
            in_n += 1
        else:
            be_sum += w
            be_n += 1
    assert s.sum_in == pytest.approx(in_sum, abs=1e-12)
    assert s.sum_between == pytest.approx(be_sum, abs=1e-12)
    assert (s.n_in_edges, s.n_between_edges) == (in_n, be_n)
    assert s.avg_in == pytest.approx(in_sum / in_n, abs=1e-12)
    assert s.avg_between == pytest.approx(be_sum / be_n, abs=1e-12)


def test_edge_partition_completeness_on_real_pmfg():
    rng = np.random.default_rng(1)
    n = 14
    c = rng.uniform(-0.6, 0.9, (n, n))
    c = (c + c.T) / 2
    np.fill_diagonal(c, 1.0)
    g = build_pmfg(build_candidates(c), n, tickers=[f"T{i}" for i in range(n)])
    sector_map = {f"T{i}": (["EN", "MA", "IN"][i % 3], False) for i in range(n)}
    s = sector_correlations(g, c, sector_map)
    assert s.n_in_edges + s.n_between_edges == 3 * (n - 2)
    when_counts_nonzero = s.avg_in == pytest.approx(s.sum_in / s.n_in_edges)
    assert when_counts_nonzero


def test_relabeling_equivariance():
    rng = np.random.default_rng(2)
    n = 10
    c = rng.uniform(0, 1, (n, n))
    c = (c + c.T) / 2
    np.fill_diagonal(c, 1.0)
    g = build_pmfg(build_candidates(c), n, tickers=[f"T{i}" for i in range(n)])
    m1 = {f"T{i}": ("EN" if i % 2 else "MA", False) for i in range(n)}
    m2 = {f"T{i}": ("UT" if i % 2 else "HC", False) for i in range(n)}  # renamed labels
    s1 = sector_correlations(g, c, m1)
    s2 = sector_correlations(g, c, m2)
    assert s1.sum_in == s2.sum_in
    assert s1.avg_between == s2.avg_between


def test_sector_labels_required_for_all_tickers():
    edges = [(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.5)]
    g = graph_from_edges(3, edges)
    with pytest.raises(DataError, match="without sector"):
        sector_correlations(g, matrix_from(edges, 3), {"T0": ("EN", False)})


def test_csv_identity_roundtrip(tmp_path):
    # recomputing the sums from the serialized edge list reproduces the summary
    rng = np.random.default_rng(3)
    n = 12
    c = rng.uniform(-0.4, 0.9, (n, n))
    c = (c + c.T) / 2
    np.fill_diagonal(c, 1.0)
    tickers = [f"T{i}" for i in range(n)]
    g = build_pmfg(build_candidates(c), n, tickers=tickers)
    sector_map = {t: (["EN", "BA"][i % 2], False) for i, t in enumerate(tickers)}
    s = sector_correlations(g, c, sector_map)

    from stocknets.pmfg import save_edges_csv

    save_edges_csv(g, tmp_path / "edges.csv")
    in_sum = be_sum = 0.0
    with open(tmp_path / "edges.csv") as fh:
        for row in csv.DictReader(fh):
            w = float(row["weight"])
            same = sector_map[row["i_ticker"]][0] == sector_map[row["j_ticker"]][0]
            if same:
                in_sum += w
            else:
                be_sum += w
    assert in_sum == s.sum_in  # bit-exact: repr round-trip
    assert be_sum == s.sum_between


def synthetic_series(n=48, days=360, k=3, seed=5, market=0.6, sector=0.7, noise=0.8):
    spec = SyntheticSpec(n_stocks=n, n_days=days, n_sectors=k, market_beta=market,
                         sector_beta=sector, noise_sigma=noise, seed=seed)
    panel, _ = generate_synthetic(spec)
    return compute_returns(panel), panel.sector_map


def test_compare_methods_shape_and_bases():
    series, sector_map = synthetic_series()
    grid = compare_methods(series, sector_map)
    assert len(grid) == 4
    assert {(s.method, s.basis) for s in grid} == {
        ("distance", BASIS_SECTOR), ("distance", BASIS_RAW),
        ("absolute", BASIS_SECTOR), ("absolute", BASIS_RAW),
    }
    for s in grid:
        assert s.n_in_edges + s.n_between_edges == 3 * (48 - 2)


def test_methods_identical_on_nonnegative_sector_matrix():
    # strong common factor keeps sector-mode entries of interest aligned; build
    # the equivalence check directly on a nonnegative matrix instead
    rng = np.random.default_rng(6)
    n = 16
    c = rng.uniform(0.0, 1.0, (n, n))
    c = (c + c.T) / 2
    np.fill_diagonal(c, 1.0)
    tickers = [f"T{i}" for i in range(n)]
    sector_map = {t: (["EN", "BA"][i % 2], False) for i, t in enumerate(tickers)}
    g1 = build_pmfg(build_candidates(c, "distance"), n, method="distance", tickers=tickers)
    g2 = build_pmfg(build_candidates(c, "absolute"), n, method="absolute", tickers=tickers)
    s1 = sector_correlations(g1, c, sector_map)
    s2 = sector_correlations(g2, c, sector_map)
    assert s1.sum_in == pytest.approx(s2.sum_in)
    assert s1.sum_between == pytest.approx(s2.sum_between)


def test_planted_panel_intra_beats_inter():
    series, sector_map = synthetic_series(seed=7)
    grid = compare_methods(series, sector_map)
    for s in grid:
        if s.basis == BASIS_SECTOR:
            assert s.avg_in > s.avg_between


def test_sector_mode_gap_exceeds_raw_gap():
    series, sector_map = synthetic_series(seed=8)
    grid = {(s.method, s.basis): s for s in compare_methods(series, sector_map)}
    for method in ("distance", "absolute"):
        sm = grid[(method, BASIS_SECTOR)]
        raw = grid[(method, BASIS_RAW)]
        assert (sm.avg_in - sm.avg_between) > (raw.avg_in - raw.avg_between)


def test_summary_csv_format(tmp_path):
    series, sector_map = synthetic_series(n=24, days=200, seed=9)
    grid = compare_methods(series, sector_map)
    write_sector_summary_csv(grid, tmp_path / "sectors.csv", kind="return")
    rows = list(csv.DictReader(open(tmp_path / "sectors.csv")))
    # wide shape: one row per method, stat columns per value basis
    assert [r["method"] for r in rows] == ["distance", "absolute"]
    assert rows[0]["kind"] == "return"
    for row in rows:
        for basis in ("sector_mode", "raw"):
            assert float(row[f"sum_in_{basis}"]) == pytest.approx(
                float(row[f"avg_in_{basis}"]) * int(row["n_in_edges"]), abs=1e-4
            )
