"""Matplotlib rendering of report figures.

All figures are written straight to PNG files with fixed metadata so two
runs of the same pipeline produce byte-identical images.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_META = {"Software": None}  # drop the version string for reproducibility

_MODE_STYLE = {
    "original": dict(color="tab:blue", ls="-", marker="o", ms=3, lw=1.0),
    "market": dict(color="tab:red", ls="-", lw=1.2),
    "sector": dict(color="tab:green", ls="--", lw=1.2),
    "random": dict(color="tab:gray", ls=":", lw=1.2),
}


def _save(fig, path: Union[str, Path]) -> None:
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def plot_correlation_pdf(hist_rows: list[dict], path: Union[str, Path], title: str = "") -> None:
    """Overlaid PDFs of the correlation coefficients and their three modes.

    `hist_rows` holds dicts with keys series, bin_left, bin_right, density.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for series in ("original", "market", "sector", "random"):
        rows = [r for r in hist_rows if r["series"] == series]
        if not rows:
            continue
        centers = [(r["bin_left"] + r["bin_right"]) / 2 for r in rows]
        ax.plot(centers, [r["density"] for r in rows], label=series,
                **_MODE_STYLE[series])
    ax.set_xlabel("correlation coefficient")
    ax.set_ylabel("probability density")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def plot_eigenvalue_pdf(hist_rows: list[dict], path: Union[str, Path], title: str = "") -> None:
    """Empirical eigenvalue density with the analytic random-matrix overlay."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    lefts = np.array([r["bin_left"] for r in hist_rows])
    rights = np.array([r["bin_right"] for r in hist_rows])
    dens = np.array([r["density"] for r in hist_rows])
    ax.bar(lefts, dens, width=rights - lefts, align="edge",
           color="tab:blue", alpha=0.55, label="empirical")
    mp = np.array([r.get("mp_density", float("nan")) for r in hist_rows])
    if np.isfinite(mp).any():
        centers = (lefts + rights) / 2
        ax.plot(centers, mp, color="tab:red", lw=1.4, label="Marchenko-Pastur")
    ax.set_xlabel("eigenvalue")
    ax.set_ylabel("probability density")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def plot_pmfg_communities(graph, partition, path: Union[str, Path],
                          max_colored: int = 8, title: str = "") -> None:
    """Planar drawing of the PMFG with the largest communities colored."""
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(range(graph.n))
    g.add_edges_from((i, j) for i, j, _ in graph.edges)
    ok, embedding = nx.check_planarity(g)
    pos = nx.planar_layout(embedding) if ok else nx.spring_layout(g, seed=0)
    cmap = plt.get_cmap("tab10")
    colors = []
    for node in range(graph.n):
        module = int(partition.assignment[node])
        colors.append(cmap((module - 1) % 10) if module <= max_colored else (0.75, 0.75, 0.75, 1.0))
    fig, ax = plt.subplots(figsize=(7.0, 7.0))
    nx.draw_networkx_edges(g, pos, ax=ax, width=0.4, alpha=0.5)
    nx.draw_networkx_nodes(g, pos, ax=ax, node_size=28, node_color=colors,
                           linewidths=0.2, edgecolors="black")
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
