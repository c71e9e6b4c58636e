"""CLI subcommands, flag resolution, exit codes."""

import json

import pytest

from stocknets.cli import main
from stocknets.pipeline import PipelineConfig
from stocknets.synthetic import SyntheticSpec


def write_config(tmp_path, **overrides):
    spec = SyntheticSpec(n_stocks=14, n_days=90, n_sectors=2, market_beta=0.6,
                         sector_beta=0.7, noise_sigma=0.8, seed=5)
    cfg = PipelineConfig(
        input=None,
        out_dir=str(tmp_path / "out"),
        kinds=("return",),
        sub_periods=(),
        trials=2,
        figures=False,
        synthetic=spec,
        **overrides,
    )
    path = tmp_path / "config.json"
    cfg.to_json(path)
    return path


def csv_fixture(tmp_path):
    rows = ["date,ticker,close,volume,shares_outstanding,sector,sh_flag"]
    import itertools

    for d, t in itertools.product(range(1, 9), "ABC"):
        rows.append(f"2020-01-{d:02d},{t}{t}{t},{10 + d},{100 * d},100000,EN,0")
    path = tmp_path / "panel.csv"
    path.write_text("\n".join(rows) + "\n")
    return path


def test_no_command_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    assert main(["--bogus", "run"]) == 1


def test_bad_config_path_is_usage_error(tmp_path):
    assert main(["--config", str(tmp_path / "nope.json"), "run"]) == 1


def test_synth_writes_panel_and_truth(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "synth"]) == 0
    out = tmp_path / "out"
    assert (out / "panel" / "meta.json").exists()
    truth = json.loads((out / "ground_truth.json").read_text())
    assert len(truth) == 14
    assert "synthetic panel" in capsys.readouterr().out


def test_ingest_roundtrip(tmp_path, capsys):
    src = csv_fixture(tmp_path)
    assert main(["--out", str(tmp_path / "out"), "ingest", "--input", str(src)]) == 0
    assert (tmp_path / "out" / "panel" / "prices.csv").exists()
    assert "3 tickers x 8 dates" in capsys.readouterr().out


def test_ingest_bad_data_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("date,ticker,close,volume,shares_outstanding,sector\n"
                   "2020-01-01,AAA,-4,100,1000,EN\n")
    assert main(["--out", str(tmp_path / "o"), "ingest", "--input", str(bad)]) == 2
    assert "data error" in capsys.readouterr().err


def test_correlate_and_binary(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "correlate", "--binary"]) == 0
    cell = tmp_path / "out" / "return" / "full"
    assert (cell / "correlation.csv").exists()
    assert (cell / "correlation.bin").exists()
    assert (cell / "eigenvalues.csv").exists()


def test_decompose_writes_modes(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "decompose"]) == 0
    cell = tmp_path / "out" / "return" / "full"
    for f in ("sector_mode.csv", "mode_market.csv", "mode_random.csv", "spectrum.json"):
        assert (cell / f).exists()


def test_pmfg_subcommand(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "pmfg"]) == 0
    cell = tmp_path / "out" / "return" / "full"
    assert (cell / "pmfg_edges.csv").exists()
    assert (cell / "pmfg.graphml").exists()
    lines = (cell / "pmfg_edges.csv").read_text().splitlines()
    assert len(lines) == 1 + 3 * (14 - 2)


def test_communities_subcommand(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "communities"]) == 0
    cell = tmp_path / "out" / "return" / "full"
    assert (cell / "communities.csv").exists()
    assert (cell / "communities.json").exists()
    assert "codelength" in capsys.readouterr().out


def test_sectors_compare_methods(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "sectors", "--compare-methods"]) == 0
    text = (tmp_path / "out" / "return" / "full" / "sector_metrics.csv").read_text()
    lines = text.splitlines()
    assert len(lines) == 3  # header + one wide row per method
    assert "avg_in_sector_mode" in lines[0] and "avg_in_raw" in lines[0]


def test_report_renders_figures(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "report"]) == 0
    cell = tmp_path / "out" / "return" / "full"
    for f in ("corr_pdf.csv", "eigen_pdf.csv", "corr_pdf.png", "eigen_pdf.png",
              "pmfg_communities.png", "sector_metrics.csv"):
        assert (cell / f).exists()


def test_run_full_pipeline(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "run"]) == 0
    out = tmp_path / "out"
    assert (out / "manifest.json").exists()
    assert (out / "eigenvalue_summary.csv").exists()
    assert "cells ok" in capsys.readouterr().out


def test_kind_flag_overrides_config(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "--kind", "turnover", "correlate"]) == 0
    assert (tmp_path / "out" / "turnover" / "full" / "correlation.csv").exists()
    assert not (tmp_path / "out" / "return" / "full" / "correlation.csv").exists()


def test_out_env_var_override(tmp_path, monkeypatch):
    cfg = write_config(tmp_path)
    monkeypatch.setenv("STOCKNETS_OUT", str(tmp_path / "envout"))
    assert main(["--config", str(cfg), "correlate"]) == 0
    assert (tmp_path / "envout" / "return" / "full" / "correlation.csv").exists()


def test_explicit_out_beats_env(tmp_path, monkeypatch):
    cfg = write_config(tmp_path)
    monkeypatch.setenv("STOCKNETS_OUT", str(tmp_path / "envout"))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "flagout"), "correlate"]) == 0
    assert (tmp_path / "flagout" / "return" / "full" / "correlation.csv").exists()
    assert not (tmp_path / "envout").exists()


def test_seed_flag_changes_manifest_hash(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "s1"), "run"]) == 0
    assert main(["--config", str(cfg), "--seed", "2", "--out", str(tmp_path / "s2"), "run"]) == 0
    m1 = json.loads((tmp_path / "s1" / "manifest.json").read_text())
    m2 = json.loads((tmp_path / "s2" / "manifest.json").read_text())
    assert m1["config_hash"] != m2["config_hash"]
    assert m1["config"]["seed"] == 1 and m2["config"]["seed"] == 2


def test_help_exits_zero():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
