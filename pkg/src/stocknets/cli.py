"""Command-line interface.

Subcommands cover single pipeline stages (ingest, synth, correlate,
decompose, pmfg, communities, sectors, report) plus the full multi-period
`run`. Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import community as community_mod
from . import sectormetrics as sector_mod
from .errors import DataError, NumericalError, UsageError
from .ingest import (
    RETURN,
    TURNOVER,
    compute_returns,
    compute_turnover,
    filter_liquidity,
    parse_panel,
    save_panel,
)
from .pipeline import KINDS, PipelineConfig, emit_distribution_data, load_input_panel, run_pipeline
from .pmfg import METHODS, build_candidates, build_pmfg, save_edges_csv, save_graphml
from .spectra import (
    decompose_modes,
    eigendecompose,
    pearson_matrix,
    save_matrix_binary,
    save_matrix_csv,
)
from .synthetic import generate_synthetic


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract is 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="stocknets", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--method", choices=METHODS, help="PMFG edge ordering")
    parser.add_argument("--kind", choices=[RETURN, TURNOVER, "both"],
                        help="series kind(s) to analyze")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("ingest", help="parse a raw CSV, filter liquidity, save a panel")
    p.add_argument("--input", required=True, metavar="CSV")

    sub.add_parser("synth", help="generate a synthetic factor-model panel")

    for name, help_text in [
        ("correlate", "correlation matrix and eigenvalue spectrum"),
        ("decompose", "random/market/sector mode decomposition"),
        ("pmfg", "planar maximally filtered graph"),
        ("communities", "infomap communities and PageRank report"),
        ("sectors", "intra/inter sector correlation summary"),
        ("report", "full single-period report with figures"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--panel", metavar="PATH",
                       help="panel directory or raw CSV (default: config input)")
        if name == "correlate":
            p.add_argument("--binary", action="store_true",
                           help="also write the compact binary matrix")
        if name == "sectors":
            p.add_argument("--compare-methods", action="store_true",
                           help="emit the 2-method x 2-basis comparison grid")

    sub.add_parser("run", help="full pipeline over all kinds and sub-periods")
    return parser


def _resolve_config(args) -> PipelineConfig:
    config = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    env_out = os.environ.get("STOCKNETS_OUT")
    if env_out:
        config = replace(config, out_dir=env_out)
    if args.out:
        config = replace(config, out_dir=args.out)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.method:
        config = replace(config, method=args.method)
    if args.kind:
        kinds = KINDS if args.kind == "both" else (args.kind,)
        config = replace(config, kinds=kinds)
    panel_arg = getattr(args, "panel", None)
    if panel_arg:
        config = replace(config, input=panel_arg)
    config.validate()
    return config


def _load_panel_for(config: PipelineConfig):
    panel = load_input_panel(config)
    return filter_liquidity(panel, config.max_consecutive_gap, config.max_total_gap)


def _series_for(panel, kind):
    return compute_returns(panel) if kind == RETURN else compute_turnover(panel)


def _stage_dirs(config: PipelineConfig, kind: str) -> Path:
    d = Path(config.out_dir) / kind / "full"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _cmd_ingest(args, config: PipelineConfig) -> None:
    panel = parse_panel(args.input, config.schema)
    kept = filter_liquidity(panel, config.max_consecutive_gap, config.max_total_gap)
    out = Path(config.out_dir) / "panel"
    save_panel(kept, out)
    print(f"panel: {kept.n} tickers x {kept.n_days} dates "
          f"({panel.n - kept.n} dropped by liquidity filter) -> {out}")


def _cmd_synth(args, config: PipelineConfig) -> None:
    panel, truth = generate_synthetic(config.synthetic)
    out = Path(config.out_dir) / "panel"
    save_panel(panel, out)
    (Path(config.out_dir) / "ground_truth.json").write_text(
        json.dumps(truth, indent=1, sort_keys=True), encoding="utf-8"
    )
    print(f"synthetic panel: {panel.n} tickers x {panel.n_days} dates -> {out}")


def _stage_artifacts(args, config: PipelineConfig, stage: str) -> None:
    panel = _load_panel_for(config)
    for kind in config.kinds:
        cell = _stage_dirs(config, kind)
        series = _series_for(panel, kind)
        spectrum = eigendecompose(pearson_matrix(series))
        save_matrix_csv(spectrum.corr, spectrum.tickers, cell / "correlation.csv")
        import csv as _csv

        with open(cell / "eigenvalues.csv", "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["alpha", "eigenvalue"])
            for a, lam in enumerate(spectrum.eigenvalues):
                writer.writerow([a, repr(float(lam))])
        if stage == "correlate":
            if getattr(args, "binary", False):
                save_matrix_binary(spectrum.corr, cell / "correlation.bin")
            print(f"{kind}: correlation spectrum -> {cell}")
            continue

        modes = decompose_modes(spectrum, config.rmt_multiplier)
        save_matrix_csv(modes.sector, spectrum.tickers, cell / "sector_mode.csv")
        if stage == "decompose":
            save_matrix_csv(modes.market, spectrum.tickers, cell / "mode_market.csv")
            save_matrix_csv(modes.random, spectrum.tickers, cell / "mode_random.csv")
            bounds = spectrum.rmt_bounds
            (cell / "spectrum.json").write_text(json.dumps({
                "n_stocks": spectrum.n,
                "n_obs": spectrum.n_obs,
                "q": spectrum.q,
                "lambda_0": modes.market_eigenvalue,
                "lambda_max_rmt": bounds[1],
                "lambda_min_rmt": bounds[0],
                "n_sector_modes": modes.n_sector_modes,
            }, indent=1, sort_keys=True), encoding="utf-8")
            print(f"{kind}: {modes.n_sector_modes} sector modes -> {cell}")
            continue

        candidates = build_candidates(modes.sector, config.method)
        graph = build_pmfg(candidates, spectrum.n, method=config.method,
                           tickers=list(spectrum.tickers))
        save_edges_csv(graph, cell / "pmfg_edges.csv")
        save_graphml(graph, cell / "pmfg.graphml", panel.sector_map)
        if stage == "pmfg":
            print(f"{kind}: PMFG with {graph.n_edges} edges -> {cell}")
            continue

        if stage == "sectors":
            if getattr(args, "compare_methods", False):
                summaries = sector_mod.compare_methods(series, panel.sector_map,
                                                       config.rmt_multiplier)
            else:
                summaries = [
                    sector_mod.sector_correlations(graph, modes.sector, panel.sector_map,
                                                   sector_mod.BASIS_SECTOR),
                    sector_mod.sector_correlations(graph, spectrum.corr, panel.sector_map,
                                                   sector_mod.BASIS_RAW),
                ]
            sector_mod.write_sector_summary_csv(summaries, cell / "sector_metrics.csv",
                                                kind=kind)
            print(f"{kind}: sector metrics -> {cell}")
            continue

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
        if stage == "communities":
            print(f"{kind}: {partition.n_modules} communities "
                  f"(codelength {partition.codelength:.4f} bits) -> {cell}")
            continue

        # stage == "report": histograms and figures on top of everything
        emit_distribution_data(spectrum, modes, cell)
        from . import plots
        from .pipeline import _read_hist_csv

        plots.plot_correlation_pdf(_read_hist_csv(cell / "corr_pdf.csv"),
                                   cell / "corr_pdf.png", title=f"{kind} correlations")
        plots.plot_eigenvalue_pdf(_read_hist_csv(cell / "eigen_pdf.csv"),
                                  cell / "eigen_pdf.png", title=f"{kind} eigenvalues")
        plots.plot_pmfg_communities(graph, partition, cell / "pmfg_communities.png",
                                    max_colored=config.report_k,
                                    title=f"{kind} PMFG communities")
        sector_mod.write_sector_summary_csv(
            [
                sector_mod.sector_correlations(graph, modes.sector, panel.sector_map,
                                               sector_mod.BASIS_SECTOR),
                sector_mod.sector_correlations(graph, spectrum.corr, panel.sector_map,
                                               sector_mod.BASIS_RAW),
            ],
            cell / "sector_metrics.csv", kind=kind,
        )
        print(f"{kind}: report with figures -> {cell}")


def _cmd_run(args, config: PipelineConfig) -> None:
    manifest = run_pipeline(config)
    n_ok = sum(1 for c in manifest["cells"] if c["ok"])
    print(f"pipeline: {n_ok}/{len(manifest['cells'])} cells ok, "
          f"{len(manifest['files'])} files -> {config.out_dir}")
    for c in manifest["cells"]:
        if not c["ok"]:
            print(f"  failed cell ({c['kind']}, {c['period']}): {c['error']}",
                  file=sys.stderr)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no command given (try --help)")
        config = _resolve_config(args)
        if args.command == "ingest":
            _cmd_ingest(args, config)
        elif args.command == "synth":
            _cmd_synth(args, config)
        elif args.command == "run":
            _cmd_run(args, config)
        else:
            _stage_artifacts(args, config, args.command)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
