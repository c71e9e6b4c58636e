"""End-to-end pipeline: configuration, per-period cells, report artifacts.

Every (series kind, period) cell runs correlation -> mode decomposition ->
PMFG -> communities -> sector metrics and writes its artifacts under
out/<kind>/<period>/. A manifest records the config hash and a content hash
of every file so reruns can be compared byte for byte.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import community as community_mod
from . import sectormetrics as sector_mod
from .errors import DataError, StocknetsError, UsageError
from .ingest import (
    RETURN,
    TURNOVER,
    ColumnSchema,
    MarketPanel,
    compute_returns,
    compute_turnover,
    filter_liquidity,
    load_panel,
    parse_panel,
    save_panel,
    slice_period,
)
from .pmfg import METHOD_DISTANCE, METHODS, build_candidates, build_pmfg, save_edges_csv, save_graphml
from .spectra import (
    CorrelationSpectrum,
    ModeDecomposition,
    decompose_modes,
    eigendecompose,
    mp_density,
    pearson_matrix,
    save_matrix_csv,
)
from .synthetic import SyntheticSpec, generate_synthetic

logger = logging.getLogger(__name__)

KINDS = (RETURN, TURNOVER)

# the five sub-periods used throughout the sub-period analysis
PAPER_SUBPERIODS = (
    (dt.date(2007, 10, 8), dt.date(2009, 3, 31)),
    (dt.date(2009, 4, 1), dt.date(2010, 9, 30)),
    (dt.date(2010, 10, 8), dt.date(2012, 3, 30)),
    (dt.date(2012, 4, 5), dt.date(2013, 9, 30)),
    (dt.date(2013, 10, 8), dt.date(2015, 3, 31)),
)


@dataclass
class PipelineConfig:
    """Everything `run` needs; serializes to/from JSON."""

    input: str | None = None  # CSV file or panel directory; None -> synthetic
    out_dir: str = "out"
    schema: ColumnSchema = field(default_factory=ColumnSchema)
    kinds: tuple[str, ...] = KINDS
    method: str = METHOD_DISTANCE
    sub_periods: tuple[tuple[dt.date, dt.date], ...] = PAPER_SUBPERIODS
    include_full_period: bool = True
    rmt_multiplier: float = 1.0
    seed: int = 0
    trials: int = 10
    damping: float = 0.85
    flow_floor: float = 1e-6
    report_k: int = 8
    prominence_min_members: int = 3
    prominence_min_share: float = 0.2
    max_consecutive_gap: int = 10
    max_total_gap: int = 30
    write_mode_matrices: bool = False
    figures: bool = True
    compare_methods: bool = False
    workers: int = 1
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)

    def validate(self) -> None:
        if self.method not in METHODS:
            raise UsageError(f"method must be one of {METHODS}, got {self.method!r}")
        bad = [k for k in self.kinds if k not in KINDS]
        if bad or not self.kinds:
            raise UsageError(f"kinds must be a non-empty subset of {KINDS}, got {self.kinds}")
        if not 0.0 < self.damping <= 1.0:
            raise UsageError(f"damping must lie in (0, 1], got {self.damping}")
        if self.trials < 1:
            raise UsageError(f"trials must be >= 1, got {self.trials}")
        if self.rmt_multiplier <= 0:
            raise UsageError(f"rmt_multiplier must be positive, got {self.rmt_multiplier}")
        if self.report_k < 1:
            raise UsageError(f"report_k must be >= 1, got {self.report_k}")
        if self.workers < 1:
            raise UsageError(f"workers must be >= 1, got {self.workers}")
        if self.flow_floor <= 0:
            raise UsageError(f"flow_floor must be positive, got {self.flow_floor}")
        if not 0.0 <= self.prominence_min_share <= 1.0:
            raise UsageError("prominence_min_share must lie in [0, 1]")
        last = None
        for start, end in self.sub_periods:
            if start > end:
                raise UsageError(f"sub-period {start}..{end} has start after end")
            if last is not None and start <= last:
                raise UsageError("sub-periods must be chronologically ordered and non-overlapping")
            last = end

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        bad = set(d) - known
        if bad:
            raise UsageError(f"unknown config keys: {sorted(bad)}")
        kw = dict(d)
        if "schema" in kw:
            kw["schema"] = ColumnSchema.from_dict(kw["schema"])
        if "synthetic" in kw:
            kw["synthetic"] = SyntheticSpec.from_dict(kw["synthetic"])
        if "sub_periods" in kw:
            kw["sub_periods"] = tuple(
                (dt.date.fromisoformat(a), dt.date.fromisoformat(b))
                for a, b in kw["sub_periods"]
            )
        if "kinds" in kw:
            kw["kinds"] = tuple(kw["kinds"])
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "PipelineConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise UsageError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "out_dir": self.out_dir,
            "schema": self.schema.to_dict(),
            "kinds": list(self.kinds),
            "method": self.method,
            "sub_periods": [[a.isoformat(), b.isoformat()] for a, b in self.sub_periods],
            "include_full_period": self.include_full_period,
            "rmt_multiplier": self.rmt_multiplier,
            "seed": self.seed,
            "trials": self.trials,
            "damping": self.damping,
            "flow_floor": self.flow_floor,
            "report_k": self.report_k,
            "prominence_min_members": self.prominence_min_members,
            "prominence_min_share": self.prominence_min_share,
            "max_consecutive_gap": self.max_consecutive_gap,
            "max_total_gap": self.max_total_gap,
            "write_mode_matrices": self.write_mode_matrices,
            "figures": self.figures,
            "compare_methods": self.compare_methods,
            "workers": self.workers,
            "synthetic": self.synthetic.to_dict(),
        }

    def to_json(self, path: Union[str, Path]) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=1, sort_keys=True), encoding="utf-8"
        )

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_input_panel(config: PipelineConfig) -> MarketPanel:
    """Load the configured input (CSV or panel dir) or synthesize one."""
    if config.input is None:
        panel, _ = generate_synthetic(config.synthetic)
        return panel
    path = Path(config.input)
    if path.is_dir():
        return load_panel(path)
    if not path.exists():
        raise UsageError(f"input not found: {path}")
    return parse_panel(path, config.schema)


# -- per-cell computation ----------------------------------------------------

@dataclass
class CellResult:
    kind: str
    period_label: str
    start: dt.date | None
    end: dt.date | None
    ok: bool
    error: str = ""
    summary: dict = field(default_factory=dict)
    files: list[str] = field(default_factory=list)


def _freedman_diaconis_edges(values: np.ndarray) -> np.ndarray:
    """FD bin edges; falls back to Sturges when the IQR is degenerate."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    lo, hi = float(x[0]), float(x[-1])
    if lo == hi:
        return np.array([lo - 0.5, hi + 0.5])
    q75, q25 = np.percentile(x, [75, 25])
    width = 2.0 * (q75 - q25) / n ** (1.0 / 3.0)
    if width <= 0:
        bins = int(math.ceil(math.log2(n))) + 1  # Sturges
    else:
        bins = int(np.clip(math.ceil((hi - lo) / width), 1, 2000))
    return np.linspace(lo, hi, bins + 1)


def _histogram_rows(values: np.ndarray) -> list[dict]:
    edges = _freedman_diaconis_edges(values)
    dens, _ = np.histogram(values, bins=edges, density=True)
    return [
        {"bin_left": float(edges[b]), "bin_right": float(edges[b + 1]),
         "density": float(dens[b])}
        for b in range(len(dens))
    ]


def _offdiag(matrix: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(matrix.shape[0], k=1)
    return matrix[iu]


def emit_distribution_data(
    spectrum: CorrelationSpectrum,
    modes: ModeDecomposition | None,
    out_dir: Union[str, Path],
) -> list[Path]:
    """Write binned correlation and eigenvalue densities as CSV files.

    Bin policy is Freedman-Diaconis with a Sturges fallback on degenerate
    IQR. Densities integrate to 1 given the bin widths; the eigenvalue file
    carries the analytic random-matrix overlay at bin centers when Q > 1.
    """
    if spectrum.eigenvalues is None:
        raise DataError("spectrum has no eigendecomposition")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    corr_path = out / "corr_pdf.csv"
    series_list = [("original", _offdiag(spectrum.corr))]
    if modes is not None:
        series_list += [
            ("market", _offdiag(modes.market)),
            ("sector", _offdiag(modes.sector)),
            ("random", _offdiag(modes.random)),
        ]
    with open(corr_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "bin_left", "bin_right", "density"])
        for name, values in series_list:
            for row in _histogram_rows(values):
                writer.writerow([name, repr(row["bin_left"]), repr(row["bin_right"]),
                                 repr(row["density"])])
    written.append(corr_path)

    eigen_path = out / "eigen_pdf.csv"
    rows = _histogram_rows(spectrum.eigenvalues)
    q = spectrum.q
    with open(eigen_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "density", "mp_density"])
        for row in rows:
            center = (row["bin_left"] + row["bin_right"]) / 2.0
            mp = mp_density(center, q) if q > 1 else float("nan")
            writer.writerow([repr(row["bin_left"]), repr(row["bin_right"]),
                             repr(row["density"]), repr(float(mp))])
    written.append(eigen_path)
    return written


def _read_hist_csv(path: Path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            {k: (v if k == "series" else float(v)) for k, v in row.items()}
            for row in reader
        ]


def run_cell(
    panel: MarketPanel,
    kind: str,
    period: tuple[dt.date, dt.date] | None,
    config: PipelineConfig,
    cell_dir: Union[str, Path],
) -> CellResult:
    """Run one (kind, period) cell and write its artifacts under cell_dir."""
    label = "full" if period is None else f"{period[0]:%Y%m%d}-{period[1]:%Y%m%d}"
    start, end = (None, None) if period is None else period
    result = CellResult(kind=kind, period_label=label, start=start, end=end, ok=False)
    cell = Path(cell_dir)
    try:
        sub = panel if period is None else slice_period(panel, period[0], period[1])
        if isinstance(sub, MarketPanel) and sub.n_days < sub.n:
            logger.warning(
                "period %s has %d days for %d tickers: Q <= 1, RMT band undefined",
                label, sub.n_days, sub.n,
            )
        series = compute_returns(sub) if kind == RETURN else compute_turnover(sub)

        spectrum = eigendecompose(pearson_matrix(series))
        modes = decompose_modes(spectrum, config.rmt_multiplier)
        cell.mkdir(parents=True, exist_ok=True)

        save_matrix_csv(spectrum.corr, spectrum.tickers, cell / "correlation.csv")
        save_matrix_csv(modes.sector, spectrum.tickers, cell / "sector_mode.csv")
        files = ["correlation.csv", "sector_mode.csv"]
        if config.write_mode_matrices:
            save_matrix_csv(modes.market, spectrum.tickers, cell / "mode_market.csv")
            save_matrix_csv(modes.random, spectrum.tickers, cell / "mode_random.csv")
            files += ["mode_market.csv", "mode_random.csv"]

        with open(cell / "eigenvalues.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "eigenvalue"])
            for a, lam in enumerate(spectrum.eigenvalues):
                writer.writerow([a, repr(float(lam))])
        files.append("eigenvalues.csv")

        candidates = build_candidates(modes.sector, config.method)
        graph = build_pmfg(candidates, spectrum.n, method=config.method,
                           tickers=list(spectrum.tickers))
        save_edges_csv(graph, cell / "pmfg_edges.csv")
        save_graphml(graph, cell / "pmfg.graphml", panel.sector_map)
        files += ["pmfg_edges.csv", "pmfg.graphml"]

        weights = community_mod.flow_weights(graph, modes.sector, config.flow_floor)
        network = community_mod.flow_network(weights, config.damping)
        partition = community_mod.detect_communities(
            network, seed=config.seed, trials=config.trials, labels=graph.tickers
        )
        report = community_mod.community_report(
            partition, graph, modes.sector, network, panel.sector_map,
            k=config.report_k, min_members=config.prominence_min_members,
            min_share=config.prominence_min_share,
        )
        community_mod.write_community_csv(report, cell / "communities.csv")
        community_mod.write_community_json(partition, report, cell / "communities.json")
        files += ["communities.csv", "communities.json"]

        if config.compare_methods:
            summaries = sector_mod.compare_methods(series, panel.sector_map,
                                                   config.rmt_multiplier)
        else:
            summaries = [
                sector_mod.sector_correlations(graph, modes.sector, panel.sector_map,
                                               sector_mod.BASIS_SECTOR),
                sector_mod.sector_correlations(graph, spectrum.corr, panel.sector_map,
                                               sector_mod.BASIS_RAW),
            ]
        sector_mod.write_sector_summary_csv(summaries, cell / "sector_metrics.csv", kind=kind)
        files.append("sector_metrics.csv")

        for p in emit_distribution_data(spectrum, modes, cell):
            files.append(p.name)

        bounds = spectrum.rmt_bounds
        summary = {
            "kind": kind,
            "period": label,
            "n_stocks": spectrum.n,
            "n_obs": spectrum.n_obs,
            "q": spectrum.q,
            "lambda_0": float(spectrum.eigenvalues[0]),
            "lambda_smallest": float(spectrum.eigenvalues[-1]),
            "lambda_max_rmt": bounds[1] if bounds else float("nan"),
            "lambda_min_rmt": bounds[0] if bounds else float("nan"),
            "n_sector_modes": modes.n_sector_modes,
            "codelength_bits": partition.codelength,
            "n_modules": partition.n_modules,
            "pmfg_edges": graph.n_edges,
        }
        (cell / "spectrum.json").write_text(
            json.dumps(summary, indent=1, sort_keys=True), encoding="utf-8"
        )
        files.append("spectrum.json")

        if config.figures:
            from . import plots

            plots.plot_correlation_pdf(
                _read_hist_csv(cell / "corr_pdf.csv"), cell / "corr_pdf.png",
                title=f"{kind} correlations, {label}",
            )
            plots.plot_eigenvalue_pdf(
                _read_hist_csv(cell / "eigen_pdf.csv"), cell / "eigen_pdf.png",
                title=f"{kind} eigenvalues, {label}",
            )
            plots.plot_pmfg_communities(
                graph, partition, cell / "pmfg_communities.png",
                max_colored=config.report_k, title=f"{kind} PMFG communities, {label}",
            )
            files += ["corr_pdf.png", "eigen_pdf.png", "pmfg_communities.png"]

        result.ok = True
        result.summary = summary
        result.files = sorted(files)
    except StocknetsError as exc:
        result.error = str(exc)
        logger.warning("cell (%s, %s) failed: %s", kind, label, exc)
    return result


def _cell_task(args) -> CellResult:
    panel, kind, period, config, cell_dir = args
    return run_cell(panel, kind, period, config, cell_dir)


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def run_pipeline(config: PipelineConfig, timestamp: bool = True) -> dict:
    """Run every (kind, period) cell and assemble the manifest.

    Returns the manifest dict (also written to out/manifest.json).
    """
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    raw_panel = load_input_panel(config)
    panel = filter_liquidity(raw_panel, config.max_consecutive_gap, config.max_total_gap)
    if config.input is None:
        save_panel(panel, out / "panel")

    periods: list[tuple[dt.date, dt.date] | None] = []
    if config.include_full_period:
        periods.append(None)
    periods.extend(config.sub_periods)

    tasks = []
    for kind in config.kinds:
        for period in periods:
            label = "full" if period is None else f"{period[0]:%Y%m%d}-{period[1]:%Y%m%d}"
            tasks.append((panel, kind, period, config, out / kind / label))

    workers = config.workers
    env_workers = os.environ.get("STOCKNETS_THREADS")
    if env_workers:
        try:
            workers = max(1, int(env_workers))
        except ValueError:
            raise UsageError(f"STOCKNETS_THREADS must be an integer, got {env_workers!r}")
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_task, tasks))
    else:
        results = [_cell_task(t) for t in tasks]

    summary_rows = [r.summary for r in results if r.ok]
    with open(out / "eigenvalue_summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["kind", "period", "n_stocks", "n_obs", "q", "lambda_0",
             "lambda_smallest", "lambda_max_rmt", "lambda_min_rmt", "n_sector_modes"]
        )
        for row in summary_rows:
            writer.writerow(
                [row["kind"], row["period"], row["n_stocks"], row["n_obs"],
                 f"{row['q']:.6f}", f"{row['lambda_0']:.6f}",
                 f"{row['lambda_smallest']:.6e}", f"{row['lambda_max_rmt']:.6f}",
                 f"{row['lambda_min_rmt']:.6e}", row["n_sector_modes"]]
            )

    manifest: dict = {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "version": _package_version(),
        "cells": [
            {
                "kind": r.kind,
                "period": r.period_label,
                "ok": r.ok,
                "error": r.error,
            }
            for r in results
        ],
        "files": {},
    }
    if timestamp:
        manifest["generated_at"] = dt.datetime.now(dt.timezone.utc).isoformat()
    for path in sorted(out.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            manifest["files"][str(path.relative_to(out))] = _sha256_file(path)
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )
    return manifest


def _package_version() -> str:
    from . import __version__

    return __version__
