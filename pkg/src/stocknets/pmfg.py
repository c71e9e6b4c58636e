"""Planar maximally filtered graph construction.

Edges are inserted greedily in similarity rank order under a planarity
test with rollback; construction stops once the triangulation is maximal
at 3(n-2) edges. Two orderings are supported: ascending distance
sqrt(2(1-c)) and descending absolute correlation |c|.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import DataError
from .planarity import is_planar_adjacency

METHOD_DISTANCE = "distance"
METHOD_ABSOLUTE = "absolute"
METHODS = (METHOD_DISTANCE, METHOD_ABSOLUTE)

_CORR_TOL = 1e-12


@dataclass(frozen=True)
class EdgeCandidate:
    """One node pair in the sorted insertion queue (ranks start at 1)."""

    i: int
    j: int
    weight: float  # signed similarity value, kept on accepted edges
    key: float  # ordering key: d_ij or |c_ij| depending on method
    rank: int


@dataclass
class PlanarGraph:
    """Weighted planar graph with construction provenance."""

    n: int
    edges: list[tuple[int, int, float]]
    adjacency: list[list[int]]
    construction_log: list[tuple[int, bool]]  # (candidate rank, accepted)
    method: str
    tickers: list[str] | None = None

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def has_edge(self, i: int, j: int) -> bool:
        a, b = self.adjacency[i], self.adjacency[j]
        return j in a if len(a) <= len(b) else i in b

    def edge_weights(self) -> dict[tuple[int, int], float]:
        return {(min(i, j), max(i, j)): w for i, j, w in self.edges}


def build_candidates(matrix: np.ndarray, method: str = METHOD_DISTANCE) -> list[EdgeCandidate]:
    """All N(N-1)/2 pairs sorted per method, ties broken by (i, j) order.

    Method "distance" sorts d_ij = sqrt(2(1-c_ij)) ascending; "absolute"
    sorts |c_ij| descending.
    """
    if method not in METHODS:
        raise DataError(f"unknown method {method!r}, expected one of {METHODS}")
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise DataError(f"matrix must be square, got {matrix.shape}")
    if n < 3:
        raise DataError(f"PMFG needs at least 3 nodes, got {n}")
    asym = float(np.abs(matrix - matrix.T).max())
    if asym > 1e-10:
        raise DataError(f"matrix asymmetry {asym:.3g} exceeds 1e-10")

    entries = []
    for i in range(n):
        row = matrix[i]
        for j in range(i + 1, n):
            c = float(row[j])
            if method == METHOD_DISTANCE:
                if c > 1.0 + _CORR_TOL:
                    raise DataError(f"c[{i},{j}] = {c!r} > 1: distance undefined")
                key = math.sqrt(2.0 * (1.0 - min(c, 1.0)))
            else:
                key = abs(c)
            entries.append((key, i, j, c))
    if method == METHOD_DISTANCE:
        entries.sort(key=lambda e: (e[0], e[1], e[2]))
    else:
        entries.sort(key=lambda e: (-e[0], e[1], e[2]))
    return [
        EdgeCandidate(i=i, j=j, weight=c, key=key, rank=r + 1)
        for r, (key, i, j, c) in enumerate(entries)
    ]


def planarity_check(graph: PlanarGraph, extra_edge: tuple[int, int]) -> bool:
    """True iff `graph` plus `extra_edge` still admits a planar embedding."""
    i, j = extra_edge
    if i == j:
        raise DataError(f"self-loop on node {i}")
    if not (0 <= i < graph.n and 0 <= j < graph.n):
        raise DataError(f"edge {extra_edge} out of range for n={graph.n}")
    if graph.has_edge(i, j):
        raise DataError(f"edge ({i}, {j}) already present")
    adj = [list(neigh) for neigh in graph.adjacency]
    adj[i].append(j)
    adj[j].append(i)
    return is_planar_adjacency(graph.n, adj, graph.n_edges + 1)


def build_pmfg(
    candidates: Sequence[EdgeCandidate],
    n: int,
    method: str = METHOD_DISTANCE,
    tickers: list[str] | None = None,
) -> PlanarGraph:
    """Greedy rank-order insertion with planarity rollback.

    `candidates` must be the complete sorted pair list for n nodes. Stops as
    soon as 3(n-2) edges are accepted (maximal planar). Every considered
    candidate is recorded in the construction log.
    """
    if n < 3:
        raise DataError(f"PMFG needs at least 3 nodes, got {n}")
    if len(candidates) != n * (n - 1) // 2:
        raise DataError(
            f"expected {n * (n - 1) // 2} candidates for n={n}, got {len(candidates)}"
        )
    target = 3 * (n - 2)
    adj: list[list[int]] = [[] for _ in range(n)]
    edges: list[tuple[int, int, float]] = []
    log: list[tuple[int, bool]] = []
    m = 0

    # union-find: joining two components can never break planarity, so those
    # candidates skip the LR test entirely
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for cand in candidates:
        i, j = cand.i, cand.j
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            accepted = True
            adj[i].append(j)
            adj[j].append(i)
            m += 1
        else:
            adj[i].append(j)
            adj[j].append(i)
            m += 1
            accepted = is_planar_adjacency(n, adj, m)
            if not accepted:
                adj[i].pop()
                adj[j].pop()
                m -= 1
        log.append((cand.rank, accepted))
        if accepted:
            edges.append((i, j, cand.weight))
            if m == target:
                break
    return PlanarGraph(n=n, edges=edges, adjacency=adj, construction_log=log,
                       method=method, tickers=tickers)


def to_weighted_adjacency(graph: PlanarGraph, sector_matrix: np.ndarray):
    """Sparse symmetric N x N holding sector-mode values on PMFG edges."""
    from scipy import sparse

    if sector_matrix.shape != (graph.n, graph.n):
        raise DataError(
            f"matrix shape {sector_matrix.shape} does not match graph n={graph.n}"
        )
    rows, cols, vals = [], [], []
    for i, j, _ in graph.edges:
        w = float(sector_matrix[i, j])
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]
    return sparse.csr_matrix((vals, (rows, cols)), shape=(graph.n, graph.n))


def save_edges_csv(graph: PlanarGraph, path: Union[str, Path]) -> None:
    """Edge list as (i_ticker, j_ticker, weight, rank)."""
    names = graph.tickers or [str(k) for k in range(graph.n)]
    rank_of = {}
    accepted_iter = iter(graph.edges)
    for rank, accepted in graph.construction_log:
        if accepted:
            i, j, _ = next(accepted_iter)
            rank_of[(i, j)] = rank
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i_ticker", "j_ticker", "weight", "rank"])
        for i, j, w in graph.edges:
            writer.writerow([names[i], names[j], repr(w), rank_of[(i, j)]])


def save_graphml(
    graph: PlanarGraph,
    path: Union[str, Path],
    sector_map: dict[str, tuple[str, bool]] | None = None,
) -> None:
    """GraphML export with ticker/sector on nodes and weight/rank on edges."""
    import networkx as nx

    names = graph.tickers or [str(k) for k in range(graph.n)]
    g = nx.Graph()
    for k in range(graph.n):
        attrs = {"ticker": names[k]}
        if sector_map and names[k] in sector_map:
            code, sh = sector_map[names[k]]
            attrs["sector"] = code
            attrs["sh"] = bool(sh)
        g.add_node(k, **attrs)
    rank_of = {}
    accepted_iter = iter(graph.edges)
    for rank, accepted in graph.construction_log:
        if accepted:
            i, j, _ = next(accepted_iter)
            rank_of[(i, j)] = rank
    for i, j, w in graph.edges:
        g.add_edge(i, j, weight=float(w), rank=rank_of[(i, j)])
    nx.write_graphml(g, str(path))
