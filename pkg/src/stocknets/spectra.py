"""Correlation matrices, their spectra, Marchenko-Pastur bounds, and the
random/market/sector mode decomposition.

Conventions: population (1/L) moments in the Pearson estimate, eigenvalues
sorted descending, eigenvector signs fixed so the first non-negligible
component is positive.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DataError, NumericalError
from .ingest import SeriesPanel

_SYMMETRY_TOL = 1e-10
_BIN_MAGIC = b"SNMX0001"


@dataclass
class CorrelationSpectrum:
    """Correlation matrix with (optionally) its eigendecomposition."""

    tickers: list[str]
    corr: np.ndarray
    sigmas: np.ndarray
    n_obs: int
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None  # orthonormal columns

    @property
    def n(self) -> int:
        return self.corr.shape[0]

    @property
    def q(self) -> float:
        return self.n_obs / self.n

    @property
    def rmt_bounds(self) -> tuple[float, float] | None:
        if self.q <= 1:
            return None
        return mp_bounds(self.n, self.n_obs)


@dataclass
class ModeDecomposition:
    """Additive split corr = random + market + sector (elementwise)."""

    random: np.ndarray
    market: np.ndarray
    sector: np.ndarray
    n_sector_modes: int  # eigenvalues above the RMT band, largest excluded
    market_eigenvalue: float
    sector_eigenvalues: np.ndarray


def pearson_matrix(series: SeriesPanel) -> CorrelationSpectrum:
    """Pearson correlation matrix of the rows of `series`, population moments."""
    x = series.values
    n, L = x.shape
    if n < 2:
        raise DataError(f"need at least 2 series, got {n}")
    means = x.mean(axis=1, keepdims=True)
    centered = x - means
    sigmas = np.sqrt((centered**2).mean(axis=1))
    dead = np.flatnonzero(sigmas == 0)
    if dead.size:
        names = ", ".join(repr(series.tickers[i]) for i in dead[:5])
        raise DataError(f"zero-variance series (correlation undefined): {names}")
    z = centered / sigmas[:, None]
    corr = (z @ z.T) / L
    corr = (corr + corr.T) / 2.0  # kill float asymmetry from BLAS blocking
    np.fill_diagonal(corr, 1.0)
    return CorrelationSpectrum(list(series.tickers), corr, sigmas, L)


def mp_bounds(n: int, n_obs: int, strict: bool = True) -> tuple[float, float]:
    """Marchenko-Pastur eigenvalue band 1 + 1/Q -/+ 2*sqrt(1/Q), Q = L/N."""
    if n < 1 or n_obs < 1:
        raise DataError(f"invalid dimensions N={n}, L={n_obs}")
    q = n_obs / n
    if strict and q <= 1:
        raise NumericalError(f"Q = L/N = {q:.4g} must exceed 1 for the MP band")
    root = 2.0 * math.sqrt(1.0 / q)
    return (1.0 + 1.0 / q - root, 1.0 + 1.0 / q + root)


def mp_density(lam: Union[float, np.ndarray], q: float) -> Union[float, np.ndarray]:
    """Marchenko-Pastur density at eigenvalue(s) `lam`; zero off-support."""
    if q <= 1:
        raise NumericalError(f"Q = {q:.4g} must exceed 1 for the MP density")
    lo = 1.0 + 1.0 / q - 2.0 * math.sqrt(1.0 / q)
    hi = 1.0 + 1.0 / q + 2.0 * math.sqrt(1.0 / q)
    arr = np.asarray(lam, dtype=float)
    out = np.zeros_like(arr)
    inside = (arr >= lo) & (arr <= hi) & (arr > 0)
    vals = arr[inside]
    out[inside] = (q / (2.0 * np.pi)) * np.sqrt((hi - vals) * (vals - lo)) / vals
    if np.isscalar(lam) or arr.ndim == 0:
        return float(out)
    return out


def eigendecompose(spectrum: CorrelationSpectrum) -> CorrelationSpectrum:
    """Fill sorted eigenvalues and sign-fixed orthonormal eigenvectors."""
    c = spectrum.corr
    asym = float(np.abs(c - c.T).max())
    if asym > _SYMMETRY_TOL:
        raise NumericalError(f"matrix asymmetry {asym:.3g} exceeds {_SYMMETRY_TOL}")
    vals, vecs = np.linalg.eigh(c)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    # deterministic sign: first non-negligible component of each vector positive
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max())
        if nz.size and col[nz[0]] < 0:
            vecs[:, k] = -col
    lam0 = float(vals[0])
    residual = float(np.abs(c @ vecs - vecs * vals).max())
    if residual > 1e-8 * max(1.0, lam0):
        raise NumericalError(f"eigendecomposition residual {residual:.3g} too large")
    return replace(spectrum, eigenvalues=vals, eigenvectors=vecs)


def decompose_modes(spectrum: CorrelationSpectrum, rmt_multiplier: float = 1.0) -> ModeDecomposition:
    """Split the correlation matrix into random, market and sector modes.

    The market mode is always the top eigenvalue's rank-1 term; the sector
    mode collects the remaining eigenvalues above rmt_multiplier * lambda_max;
    everything else is the random mode.
    """
    if spectrum.eigenvalues is None or spectrum.eigenvectors is None:
        raise NumericalError("spectrum has no eigendecomposition; call eigendecompose first")
    bounds = spectrum.rmt_bounds
    if bounds is None:
        raise NumericalError(
            f"Q = {spectrum.q:.4g} <= 1: RMT band undefined, cannot split modes"
        )
    lam_max = bounds[1] * rmt_multiplier
    vals, vecs = spectrum.eigenvalues, spectrum.eigenvectors

    u0 = vecs[:, 0]
    market = vals[0] * np.outer(u0, u0)
    sector_idx = np.flatnonzero(vals[1:] > lam_max) + 1
    random_idx = np.array(
        [k for k in range(1, len(vals)) if k not in set(sector_idx.tolist())], dtype=int
    )
    sector = _reconstruct(vals, vecs, sector_idx)
    random_part = _reconstruct(vals, vecs, random_idx)
    return ModeDecomposition(
        random=random_part,
        market=(market + market.T) / 2.0,
        sector=sector,
        n_sector_modes=int(sector_idx.size),
        market_eigenvalue=float(vals[0]),
        sector_eigenvalues=vals[sector_idx].copy(),
    )


def _reconstruct(vals: np.ndarray, vecs: np.ndarray, idx: np.ndarray) -> np.ndarray:
    n = vecs.shape[0]
    if idx.size == 0:
        return np.zeros((n, n))
    u = vecs[:, idx]
    out = (u * vals[idx]) @ u.T
    return (out + out.T) / 2.0


# -- matrix serialization ----------------------------------------------------

def save_matrix_csv(matrix: np.ndarray, tickers: list[str], path: Union[str, Path]) -> None:
    """Full symmetric matrix as row-major CSV with a ticker header column."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ticker"] + tickers)
        for i, t in enumerate(tickers):
            writer.writerow([t] + [repr(float(x)) for x in matrix[i]])


def load_matrix_csv(path: Union[str, Path]) -> tuple[np.ndarray, list[str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        tickers = header[1:]
        rows = list(reader)
    if len(rows) != len(tickers):
        raise DataError(f"{path}: expected {len(tickers)} rows, got {len(rows)}")
    return np.array([[float(x) for x in r[1:]] for r in rows]), tickers


def save_matrix_binary(matrix: np.ndarray, path: Union[str, Path]) -> None:
    """Compact layout: 8-byte magic, uint32 LE order N, N*N float64 LE row-major."""
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise DataError(f"matrix must be square, got {matrix.shape}")
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write(struct.pack("<I", n))
        fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())


def load_matrix_binary(path: Union[str, Path]) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:8] != _BIN_MAGIC:
        raise DataError(f"{path}: bad magic bytes (not a matrix file)")
    (n,) = struct.unpack("<I", raw[8:12])
    expected = 12 + 8 * n * n
    if len(raw) != expected:
        raise DataError(f"{path}: expected {expected} bytes for N={n}, got {len(raw)}")
    return np.frombuffer(raw[12:], dtype="<f8").reshape(n, n).copy()
