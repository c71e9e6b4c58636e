"""Market panel ingestion: CSV parsing, liquidity filtering, return and
turnover series, sub-period slicing, and panel serialization.

A panel is rectangular N instruments x L dates with an explicit missing
mask; gaps are never silently zero-filled at ingest time. Series
construction applies the gap policy (flagged zero cells) so downstream
correlation code always sees finite rectangular arrays.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DataError

SECTOR_CODES = ("EN", "MA", "IN", "CG", "HC", "BA", "RE", "IT", "UT")

RETURN = "return"
TURNOVER = "turnover"


@dataclass(frozen=True)
class ColumnSchema:
    """Maps logical panel columns onto CSV header names."""

    date: str = "date"
    ticker: str = "ticker"
    close: str = "close"
    volume: str = "volume"
    shares_outstanding: str = "shares_outstanding"
    sector: str = "sector"
    sh_flag: str = "sh_flag"  # optional column
    sector_codes: tuple[str, ...] = SECTOR_CODES

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnSchema":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(d) - known
        if bad:
            raise DataError(f"unknown schema keys: {sorted(bad)}")
        if "sector_codes" in d:
            d = dict(d, sector_codes=tuple(d["sector_codes"]))
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "date": self.date,
            "ticker": self.ticker,
            "close": self.close,
            "volume": self.volume,
            "shares_outstanding": self.shares_outstanding,
            "sector": self.sector,
            "sh_flag": self.sh_flag,
            "sector_codes": list(self.sector_codes),
        }


@dataclass
class MarketPanel:
    """Calendar-aligned daily panel of prices, volumes and shares outstanding.

    All matrices are N x L float64 with NaN at missing cells; `missing` is the
    authoritative mask. `sector_map` maps ticker -> (GICS code, SH overlay).
    """

    tickers: list[str]
    dates: list[dt.date]
    prices: np.ndarray
    volumes: np.ndarray
    shares_outstanding: np.ndarray
    sector_map: dict[str, tuple[str, bool]]
    missing: np.ndarray

    @property
    def n(self) -> int:
        return len(self.tickers)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def validate(self) -> None:
        shape = (self.n, self.n_days)
        for name in ("prices", "volumes", "shares_outstanding", "missing"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise DataError(f"{name} has shape {arr.shape}, expected {shape}")
        if any(self.dates[i] >= self.dates[i + 1] for i in range(len(self.dates) - 1)):
            raise DataError("panel dates are not strictly increasing")
        for t in self.tickers:
            if t not in self.sector_map:
                raise DataError(f"ticker {t!r} has no sector_map entry")
        ok = ~self.missing
        if np.any(self.prices[ok] <= 0):
            raise DataError("non-positive close price on a non-missing cell")
        if np.any(self.volumes[ok] < 0):
            raise DataError("negative volume on a non-missing cell")
        if np.any(self.shares_outstanding[ok] <= 0):
            raise DataError("non-positive shares outstanding on a non-missing cell")

    def equals(self, other: "MarketPanel") -> bool:
        return (
            self.tickers == other.tickers
            and self.dates == other.dates
            and self.sector_map == other.sector_map
            and np.array_equal(self.missing, other.missing)
            and _nan_equal(self.prices, other.prices)
            and _nan_equal(self.volumes, other.volumes)
            and _nan_equal(self.shares_outstanding, other.shares_outstanding)
        )


@dataclass
class SeriesPanel:
    """Derived N x T series (returns or turnover) with gap flags."""

    kind: str
    values: np.ndarray
    flags: np.ndarray  # True where the gap policy zero-filled the cell
    tickers: list[str]
    dates: list[dt.date]

    @property
    def n(self) -> int:
        return len(self.tickers)

    @property
    def n_obs(self) -> int:
        return self.values.shape[1]


def _nan_equal(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and np.array_equal(a, b, equal_nan=True)


def _parse_date(text: str, line: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise DataError(f"line {line}: bad date {text!r} (expected ISO-8601)") from exc


def _parse_float(text: str, line: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise DataError(f"line {line}: bad {col} value {text!r}") from exc
    if not math.isfinite(value):
        raise DataError(f"line {line}: non-finite {col} value {text!r}")
    return value


def parse_panel(
    source: Union[str, Path, bytes, io.IOBase],
    schema: ColumnSchema | None = None,
) -> MarketPanel:
    """Parse a raw daily-records CSV into a calendar-aligned MarketPanel.

    The calendar is the union of all tickers' trading dates; absent
    (ticker, date) cells become missing-mask entries. Rows failing
    validation raise DataError with the offending line number.
    """
    schema = schema or ColumnSchema()
    if isinstance(source, (str, Path)):
        fh: io.TextIOBase = open(source, "r", encoding="utf-8", newline="")
        close_fh = True
    elif isinstance(source, bytes):
        fh = io.StringIO(source.decode("utf-8"))
        close_fh = False
    else:
        raw = source.read()
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        fh = io.StringIO(raw)
        close_fh = False

    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError("empty CSV: no header row")
        required = [schema.date, schema.ticker, schema.close, schema.volume,
                    schema.shares_outstanding, schema.sector]
        missing_cols = [c for c in required if c not in reader.fieldnames]
        if missing_cols:
            raise DataError(f"missing required columns: {missing_cols}")
        has_sh = schema.sh_flag in reader.fieldnames
        code_set = set(schema.sector_codes)

        records: dict[tuple[str, dt.date], tuple[float, float, float]] = {}
        sector_map: dict[str, tuple[str, bool]] = {}
        tickers: list[str] = []
        dates_seen: set[dt.date] = set()

        for row in reader:
            line = reader.line_num
            if None in row or any(v is None for v in row.values()):
                raise DataError(f"line {line}: malformed row (wrong field count)")
            ticker = row[schema.ticker].strip()
            if not ticker:
                raise DataError(f"line {line}: empty ticker")
            date = _parse_date(row[schema.date], line)
            close = _parse_float(row[schema.close], line, "close")
            if close <= 0:
                raise DataError(f"line {line}: close must be positive, got {close}")
            volume = _parse_float(row[schema.volume], line, "volume")
            if volume < 0 or volume != int(volume):
                raise DataError(f"line {line}: volume must be a non-negative integer, got {row[schema.volume]!r}")
            shares = _parse_float(row[schema.shares_outstanding], line, "shares_outstanding")
            if shares <= 0 or shares != int(shares):
                raise DataError(f"line {line}: shares_outstanding must be a positive integer, got {row[schema.shares_outstanding]!r}")
            sector = row[schema.sector].strip()
            if sector not in code_set:
                raise DataError(f"line {line}: unknown sector code {sector!r} for ticker {ticker!r}")
            sh = False
            if has_sh:
                sh_raw = row[schema.sh_flag].strip()
                if sh_raw not in ("", "0", "1"):
                    raise DataError(f"line {line}: sh_flag must be 0 or 1, got {sh_raw!r}")
                sh = sh_raw == "1"

            key = (ticker, date)
            if key in records:
                raise DataError(f"line {line}: duplicate record for ticker {ticker!r} on {date}")
            if ticker in sector_map:
                if sector_map[ticker] != (sector, sh):
                    raise DataError(
                        f"line {line}: inconsistent sector for ticker {ticker!r}: "
                        f"{sector_map[ticker]} vs {(sector, sh)}"
                    )
            else:
                sector_map[ticker] = (sector, sh)
                tickers.append(ticker)
            records[key] = (close, volume, shares)
            dates_seen.add(date)
    finally:
        if close_fh:
            fh.close()

    if not records:
        raise DataError("CSV contains no data rows")

    dates = sorted(dates_seen)
    date_idx = {d: j for j, d in enumerate(dates)}
    n, L = len(tickers), len(dates)
    prices = np.full((n, L), np.nan)
    volumes = np.full((n, L), np.nan)
    shares_arr = np.full((n, L), np.nan)
    missing = np.ones((n, L), dtype=bool)
    tick_idx = {t: i for i, t in enumerate(tickers)}
    for (ticker, date), (close, volume, shares) in records.items():
        i, j = tick_idx[ticker], date_idx[date]
        prices[i, j] = close
        volumes[i, j] = volume
        shares_arr[i, j] = shares
        missing[i, j] = False

    panel = MarketPanel(tickers, dates, prices, volumes, shares_arr, sector_map, missing)
    panel.validate()
    return panel


def _gap_stats(missing_row: np.ndarray) -> tuple[int, int]:
    total = int(missing_row.sum())
    longest = run = 0
    for flag in missing_row:
        run = run + 1 if flag else 0
        if run > longest:
            longest = run
    return longest, total


def filter_liquidity(
    panel: MarketPanel,
    max_consecutive_gap: int = 10,
    max_total_gap: int = 30,
) -> MarketPanel:
    """Drop tickers suspended for more than `max_consecutive_gap` days in a
    row or more than `max_total_gap` days in total. Ticker order preserved."""
    keep = []
    for i in range(panel.n):
        longest, total = _gap_stats(panel.missing[i])
        if longest <= max_consecutive_gap and total <= max_total_gap:
            keep.append(i)
    if len(keep) < 3:
        raise DataError(
            f"liquidity filter keeps {len(keep)} tickers; at least 3 required for a PMFG"
        )
    idx = np.array(keep)
    tickers = [panel.tickers[i] for i in keep]
    return MarketPanel(
        tickers=tickers,
        dates=list(panel.dates),
        prices=panel.prices[idx].copy(),
        volumes=panel.volumes[idx].copy(),
        shares_outstanding=panel.shares_outstanding[idx].copy(),
        sector_map={t: panel.sector_map[t] for t in tickers},
        missing=panel.missing[idx].copy(),
    )


def compute_returns(panel: MarketPanel) -> SeriesPanel:
    """Log returns ln(p(t+1)/p(t)) per transition; transitions straddling a
    missing cell are zero-filled and flagged."""
    if panel.n_days < 2:
        raise DataError("panel has fewer than 2 dates; returns undefined")
    for i, t in enumerate(panel.tickers):
        if int((~panel.missing[i]).sum()) < 2:
            raise DataError(f"ticker {t!r} has fewer than 2 observations")
    ok = ~panel.missing
    good = ok[:, 1:] & ok[:, :-1]
    values = np.zeros((panel.n, panel.n_days - 1))
    ratio = panel.prices[:, 1:][good] / panel.prices[:, :-1][good]
    values[good] = np.log(ratio)
    return SeriesPanel(
        kind=RETURN,
        values=values,
        flags=~good,
        tickers=list(panel.tickers),
        dates=list(panel.dates[1:]),
    )


def compute_turnover(panel: MarketPanel) -> SeriesPanel:
    """Turnover rate volume/shares_outstanding per cell; missing cells are
    zero-filled and flagged."""
    ok = ~panel.missing
    bad_shares = ok & ~(panel.shares_outstanding > 0)
    if np.any(bad_shares):
        i = int(np.argwhere(bad_shares)[0][0])
        raise DataError(f"ticker {panel.tickers[i]!r} has non-positive shares outstanding")
    values = np.zeros((panel.n, panel.n_days))
    values[ok] = panel.volumes[ok] / panel.shares_outstanding[ok]
    return SeriesPanel(
        kind=TURNOVER,
        values=values,
        flags=panel.missing.copy(),
        tickers=list(panel.tickers),
        dates=list(panel.dates),
    )


def slice_period(
    data: Union[MarketPanel, SeriesPanel],
    start: dt.date,
    end: dt.date,
) -> Union[MarketPanel, SeriesPanel]:
    """Restrict a panel or series to dates in [start, end] inclusive."""
    if start > end:
        raise DataError(f"start {start} is after end {end}")
    cols = [j for j, d in enumerate(data.dates) if start <= d <= end]
    if not cols:
        raise DataError(f"no dates in range [{start}, {end}]")
    idx = np.array(cols)
    dates = [data.dates[j] for j in cols]
    if isinstance(data, MarketPanel):
        return MarketPanel(
            tickers=list(data.tickers),
            dates=dates,
            prices=data.prices[:, idx].copy(),
            volumes=data.volumes[:, idx].copy(),
            shares_outstanding=data.shares_outstanding[:, idx].copy(),
            sector_map=dict(data.sector_map),
            missing=data.missing[:, idx].copy(),
        )
    return SeriesPanel(
        kind=data.kind,
        values=data.values[:, idx].copy(),
        flags=data.flags[:, idx].copy(),
        tickers=list(data.tickers),
        dates=dates,
    )


# -- panel serialization: meta.json plus one CSV per matrix ------------------

_MATRIX_FILES = {
    "prices": "prices.csv",
    "volumes": "volumes.csv",
    "shares_outstanding": "shares_outstanding.csv",
}


def _write_matrix_csv(path: Path, tickers: list[str], dates: list[dt.date], arr: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ticker"] + [d.isoformat() for d in dates])
        for i, t in enumerate(tickers):
            writer.writerow([t] + [repr(float(x)) for x in arr[i]])


def _read_matrix_csv(path: Path, tickers: list[str], dates: list[dt.date]) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        got_dates = [dt.date.fromisoformat(x) for x in header[1:]]
        if got_dates != dates:
            raise DataError(f"{path}: date axis does not match meta.json")
        rows = list(reader)
    if [r[0] for r in rows] != tickers:
        raise DataError(f"{path}: ticker axis does not match meta.json")
    return np.array([[float(x) for x in r[1:]] for r in rows])


def save_panel(panel: MarketPanel, directory: Union[str, Path]) -> None:
    """Serialize a panel as meta.json plus one CSV per matrix."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    meta = {
        "tickers": panel.tickers,
        "dates": [x.isoformat() for x in panel.dates],
        "sector_map": {t: [code, bool(sh)] for t, (code, sh) in panel.sector_map.items()},
    }
    (d / "meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True), encoding="utf-8")
    for attr, fname in _MATRIX_FILES.items():
        _write_matrix_csv(d / fname, panel.tickers, panel.dates, getattr(panel, attr))
    with open(d / "missing.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ticker"] + [x.isoformat() for x in panel.dates])
        for i, t in enumerate(panel.tickers):
            writer.writerow([t] + ["1" if x else "0" for x in panel.missing[i]])


def load_panel(directory: Union[str, Path]) -> MarketPanel:
    """Inverse of save_panel; round-trips bit-exactly."""
    d = Path(directory)
    meta_path = d / "meta.json"
    if not meta_path.exists():
        raise DataError(f"{d} is not a panel directory (no meta.json)")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    tickers = list(meta["tickers"])
    dates = [dt.date.fromisoformat(x) for x in meta["dates"]]
    sector_map = {t: (code, bool(sh)) for t, (code, sh) in meta["sector_map"].items()}
    mats = {
        attr: _read_matrix_csv(d / fname, tickers, dates)
        for attr, fname in _MATRIX_FILES.items()
    }
    with open(d / "missing.csv", "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        missing = np.array([[c == "1" for c in row[1:]] for row in reader])
    panel = MarketPanel(
        tickers=tickers,
        dates=dates,
        prices=mats["prices"],
        volumes=mats["volumes"],
        shares_outstanding=mats["shares_outstanding"],
        sector_map=sector_map,
        missing=missing,
    )
    panel.validate()
    return panel
