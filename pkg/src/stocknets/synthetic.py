"""Synthetic factor-model market panels for benchmarking and acceptance tests.

Returns follow a one-market + one-sector-factor linear model; volumes are
drawn so the turnover series carries the same factor structure with its own
independent noise. Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .ingest import SECTOR_CODES, MarketPanel

_SHARES = 1_000_000_000.0
_BASE_TURNOVER = 0.05
_START_DATE = dt.date(2010, 1, 4)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the planted-sector factor model."""

    n_stocks: int = 120
    n_days: int = 600
    n_sectors: int = 4
    market_beta: float = 0.7
    sector_beta: float = 0.5
    noise_sigma: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_stocks < 3:
            raise DataError(f"n_stocks must be >= 3, got {self.n_stocks}")
        if self.n_days <= self.n_stocks:
            raise DataError(
                f"n_days ({self.n_days}) must exceed n_stocks ({self.n_stocks}) to keep Q > 1"
            )
        if not 1 <= self.n_sectors <= len(SECTOR_CODES):
            raise DataError(
                f"n_sectors must lie in [1, {len(SECTOR_CODES)}], got {self.n_sectors}"
            )
        if self.market_beta < 0 or self.sector_beta < 0 or self.noise_sigma < 0:
            raise DataError("betas and noise_sigma must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        known = set(cls.__dataclass_fields__)
        bad = set(d) - known
        if bad:
            raise DataError(f"unknown synthetic keys: {sorted(bad)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "n_stocks": self.n_stocks,
            "n_days": self.n_days,
            "n_sectors": self.n_sectors,
            "market_beta": self.market_beta,
            "sector_beta": self.sector_beta,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }


def _trading_dates(n_days: int) -> list[dt.date]:
    dates = []
    d = _START_DATE
    while len(dates) < n_days:
        if d.weekday() < 5:
            dates.append(d)
        d += dt.timedelta(days=1)
    return dates


def sector_assignment(spec: SyntheticSpec) -> list[str]:
    """Planted GICS code per stock, block sizes as equal as divisibility allows."""
    base, extra = divmod(spec.n_stocks, spec.n_sectors)
    codes = []
    for g in range(spec.n_sectors):
        size = base + (1 if g < extra else 0)
        codes.extend([SECTOR_CODES[g]] * size)
    return codes


def generate_synthetic(spec: SyntheticSpec) -> tuple[MarketPanel, dict[str, str]]:
    """Build a panel from the factor model; also return the planted sectors.

    Daily log return of stock i in sector g:
        r_i(t) = market_beta * m(t) + sector_beta * s_g(t) + noise_sigma * eps_i(t)
    with independent standard Gaussian factors. Prices compound from 100.
    Turnover targets share the same factors with fresh noise, scaled around a
    5% base rate, and volumes are the rounded share counts they imply.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n, days, k = spec.n_stocks, spec.n_days, spec.n_sectors
    codes = sector_assignment(spec)
    group = np.array([SECTOR_CODES.index(c) for c in codes])

    market = rng.standard_normal(days)
    sector_factors = rng.standard_normal((k, days))
    eps_r = rng.standard_normal((n, days))
    returns = (
        spec.market_beta * market[None, :]
        + spec.sector_beta * sector_factors[group]
        + spec.noise_sigma * eps_r
    )
    prices = 100.0 * np.exp(np.cumsum(returns, axis=1))

    eps_t = rng.standard_normal((n, days))
    raw = (
        spec.market_beta * market[None, :]
        + spec.sector_beta * sector_factors[group]
        + spec.noise_sigma * eps_t
    )
    sigma = max(np.sqrt(spec.market_beta**2 + spec.sector_beta**2 + spec.noise_sigma**2), 1e-12)
    # 6-sigma headroom keeps the clip at zero from essentially ever binding
    turnover = np.clip(_BASE_TURNOVER * (1.0 + raw / (6.0 * sigma)), 0.0, None)
    volumes = np.round(turnover * _SHARES)

    tickers = [f"S{idx:04d}" for idx in range(n)]
    dates = _trading_dates(days)
    panel = MarketPanel(
        tickers=tickers,
        dates=dates,
        prices=prices,
        volumes=volumes,
        shares_outstanding=np.full((n, days), _SHARES),
        sector_map={t: (codes[i], False) for i, t in enumerate(tickers)},
        missing=np.zeros((n, days), dtype=bool),
    )
    panel.validate()
    return panel, {t: codes[i] for i, t in enumerate(tickers)}
