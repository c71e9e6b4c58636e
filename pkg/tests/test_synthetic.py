"""Synthetic factor-model generator."""

import numpy as np
import pytest

from stocknets.errors import DataError
from stocknets.ingest import compute_returns, compute_turnover
from stocknets.spectra import decompose_modes, eigendecompose, pearson_matrix
from stocknets.synthetic import SyntheticSpec, generate_synthetic, sector_assignment


def test_deterministic_for_fixed_seed():
    spec = SyntheticSpec(n_stocks=20, n_days=100, n_sectors=4, seed=123)
    p1, t1 = generate_synthetic(spec)
    p2, t2 = generate_synthetic(spec)
    assert t1 == t2
    assert np.array_equal(p1.prices, p2.prices)
    assert np.array_equal(p1.volumes, p2.volumes)


def test_different_seeds_differ():
    a, _ = generate_synthetic(SyntheticSpec(n_stocks=10, n_days=50, seed=1))
    b, _ = generate_synthetic(SyntheticSpec(n_stocks=10, n_days=50, seed=2))
    assert not np.array_equal(a.prices, b.prices)


def test_sector_sizes_as_equal_as_possible():
    spec = SyntheticSpec(n_stocks=11, n_days=50, n_sectors=3)
    codes = sector_assignment(spec)
    counts = {c: codes.count(c) for c in set(codes)}
    assert sorted(counts.values()) == [3, 4, 4]


def test_panel_well_formed():
    panel, truth = generate_synthetic(SyntheticSpec(n_stocks=12, n_days=40, n_sectors=3))
    panel.validate()
    assert not panel.missing.any()
    assert all(truth[t] == panel.sector_map[t][0] for t in panel.tickers)
    assert np.all(panel.volumes >= 0)
    assert np.all(panel.volumes == np.round(panel.volumes))


def test_prices_compound_from_100():
    panel, _ = generate_synthetic(SyntheticSpec(n_stocks=5, n_days=30, seed=3))
    r = compute_returns(panel)
    # prices are exponentiated cumulative returns anchored at 100
    recon = 100.0 * np.exp(np.cumsum(np.concatenate(
        [np.log(panel.prices[:, :1] / 100.0), r.values], axis=1), axis=1))
    assert np.allclose(recon, panel.prices, rtol=1e-10)


def test_zero_noise_zero_market_gives_perfect_within_sector_correlation():
    spec = SyntheticSpec(n_stocks=9, n_days=60, n_sectors=3, market_beta=0.0,
                         sector_beta=0.8, noise_sigma=0.0, seed=4)
    panel, truth = generate_synthetic(spec)
    r = compute_returns(panel)
    c = pearson_matrix(r).corr
    for i in range(9):
        for j in range(9):
            if truth[panel.tickers[i]] == truth[panel.tickers[j]]:
                assert c[i, j] == pytest.approx(1.0, abs=1e-9)


def test_turnover_carries_factor_structure():
    spec = SyntheticSpec(n_stocks=30, n_days=300, n_sectors=3, market_beta=0.4,
                         sector_beta=0.8, noise_sigma=0.6, seed=5)
    panel, truth = generate_synthetic(spec)
    t = compute_turnover(panel)
    c = pearson_matrix(t).corr
    same = []
    diff = []
    for i in range(30):
        for j in range(i + 1, 30):
            bucket = same if truth[panel.tickers[i]] == truth[panel.tickers[j]] else diff
            bucket.append(c[i, j])
    assert np.mean(same) > np.mean(diff) + 0.1


def test_market_only_panel_rarely_exceeds_band():
    # without sector factors at most the market eigenvalue leaves the band
    hits = 0
    n_seeds = 100
    for seed in range(n_seeds):
        spec = SyntheticSpec(n_stocks=40, n_days=240, n_sectors=4, market_beta=0.5,
                             sector_beta=0.0, noise_sigma=1.0, seed=seed)
        panel, _ = generate_synthetic(spec)
        s = eigendecompose(pearson_matrix(compute_returns(panel)))
        lo, hi = s.rmt_bounds
        above = int(np.sum(s.eigenvalues > hi))
        if above <= 1:
            hits += 1
    assert hits >= 95


def test_sector_modes_recovered_for_three_factor_panel():
    # strong market factor: expect exactly k-1 sector eigenvalues above band
    spec = SyntheticSpec(n_stocks=45, n_days=400, n_sectors=3, market_beta=0.8,
                         sector_beta=0.6, noise_sigma=0.9, seed=6)
    panel, _ = generate_synthetic(spec)
    s = eigendecompose(pearson_matrix(compute_returns(panel)))
    modes = decompose_modes(s)
    assert modes.n_sector_modes == 2


def test_spec_validation():
    with pytest.raises(DataError):
        SyntheticSpec(n_stocks=2).validate()
    with pytest.raises(DataError):
        SyntheticSpec(n_stocks=50, n_days=50).validate()
    with pytest.raises(DataError):
        SyntheticSpec(n_sectors=10).validate()
    with pytest.raises(DataError):
        SyntheticSpec(market_beta=-0.1).validate()
    with pytest.raises(DataError):
        SyntheticSpec.from_dict({"bogus": 1})
