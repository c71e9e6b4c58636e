"""Community detection on the weighted PMFG.

The objective is the two-level map equation evaluated over the flows of a
damped random walk (the same walk whose stationary distribution serves as
PageRank centrality). Optimization is best-of-trials greedy: seeded
node-level moves, module aggregation, and a refinement pass.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np
from scipy import sparse

from .errors import DataError, NumericalError
from .pmfg import PlanarGraph

_EPS_IMPROVE = 1e-12


@dataclass
class FlowNetwork:
    """Nonnegative symmetric weights plus the damped-walk visit rates."""

    n: int
    weights: sparse.csr_matrix
    damping: float
    node_visit_rates: np.ndarray


@dataclass
class Community:
    """One detected module with the statistics reported per community."""

    rank: int
    members: list[int]
    tickers: list[str]
    n_stock: int
    sum_pagerank: float
    sum_mean_corr: float
    top50_members: list[int]
    sector_roster_all: dict[str, int]
    sector_roster_top50: dict[str, int]
    sh_count_all: int
    sh_count_top50: int
    prominent_all: list[str]
    prominent_top50: list[str]


@dataclass
class CommunityPartition:
    """Module assignment (ids 1..K ranked by summed PageRank) and codelength."""

    assignment: np.ndarray
    codelength: float
    members: list[list[int]]  # members[k] holds module k+1
    pagerank_sums: list[float]

    @property
    def n_modules(self) -> int:
        return len(self.members)


def flow_weights(graph: PlanarGraph, sector_matrix: np.ndarray, floor: float = 1e-6) -> sparse.csr_matrix:
    """Map signed PMFG edge values to nonnegative flow weights.

    Anti-correlated edges carry (almost) no flow: weight max(c, floor) with a
    small floor keeping the PMFG connected for the random walk.
    """
    if floor <= 0:
        raise DataError(f"flow floor must be positive, got {floor}")
    rows, cols, vals = [], [], []
    for i, j, _ in graph.edges:
        w = max(float(sector_matrix[i, j]), floor)
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]
    return sparse.csr_matrix((vals, (rows, cols)), shape=(graph.n, graph.n))


def flow_network(weights: sparse.spmatrix, damping: float = 0.85) -> FlowNetwork:
    """Validate weights, run the damped walk and package the result."""
    w = sparse.csr_matrix(weights, dtype=float)
    n = w.shape[0]
    if w.shape != (n, n):
        raise DataError(f"weights must be square, got {w.shape}")
    if w.nnz and w.data.min() < 0:
        raise DataError("flow weights must be nonnegative")
    asym = abs(w - w.T)
    if asym.nnz and asym.data.max() > 1e-10:
        raise DataError("flow weights must be symmetric")
    if not 0.0 <= damping <= 1.0:
        raise DataError(f"damping must lie in [0, 1], got {damping}")
    rates = _pagerank(w, damping)
    return FlowNetwork(n=n, weights=w, damping=damping, node_visit_rates=rates)


def pagerank(network: FlowNetwork, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Stationary vector of the weighted damped walk on the network."""
    return _pagerank(network.weights, network.damping, tol=tol, max_iter=max_iter)


def _pagerank(weights: sparse.csr_matrix, damping: float, tol: float = 1e-12,
              max_iter: int = 100_000) -> np.ndarray:
    n = weights.shape[0]
    if n == 0:
        raise DataError("empty network")
    strength = np.asarray(weights.sum(axis=1)).ravel()
    dangling = strength == 0
    if damping == 1.0 and dangling.any():
        k = int(np.flatnonzero(dangling)[0])
        raise NumericalError(f"node {k} has zero strength and damping=1: walk undefined")
    if damping == 0.0:
        return np.full(n, 1.0 / n)
    inv_strength = np.zeros(n)
    inv_strength[~dangling] = 1.0 / strength[~dangling]
    pr = np.full(n, 1.0 / n)
    wt = weights.T.tocsr()
    for _ in range(max_iter):
        link = wt @ (pr * inv_strength)
        new = (1.0 - damping) / n + damping * (link + pr[dangling].sum() / n)
        delta = float(np.abs(new - pr).sum())
        pr = new
        if delta < tol:
            break
    else:
        raise NumericalError(f"PageRank failed to converge within {max_iter} iterations")
    return pr / pr.sum()


def _plogp(x: float) -> float:
    if x <= 1e-15:
        return 0.0
    return x * math.log2(x)


class _Level:
    """One aggregation level: entities with visit rates and directed flows."""

    __slots__ = ("n_entities", "n_orig", "p", "telp", "cnt", "flows_out",
                 "flows_in", "out_flow")

    def __init__(self, n_entities, n_orig, p, telp, cnt, flows_out, flows_in):
        self.n_entities = n_entities
        self.n_orig = n_orig
        self.p = p
        self.telp = telp
        self.cnt = cnt
        self.flows_out = flows_out
        self.flows_in = flows_in
        self.out_flow = [sum(f for _, f in fo) for fo in flows_out]


def _base_level(network: FlowNetwork) -> _Level:
    n = network.n
    p = network.node_visit_rates
    d = network.damping
    w = network.weights
    strength = np.asarray(w.sum(axis=1)).ravel()
    dangling = strength == 0
    # teleport-like rate: explicit teleportation plus uniform dangling spread
    telp = p * ((1.0 - d) + d * dangling)
    flows_out: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    flows_in: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    indptr, indices, data = w.indptr, w.indices, w.data
    for a in range(n):
        if dangling[a]:
            continue
        coef = d * p[a] / strength[a]
        for pos in range(indptr[a], indptr[a + 1]):
            b = int(indices[pos])
            f = coef * float(data[pos])
            if f == 0.0 or a == b:
                continue
            flows_out[a].append((b, f))
            flows_in[b].append((a, f))
    return _Level(n, n, p.astype(float), telp.astype(float),
                  np.ones(n, dtype=float), flows_out, flows_in)


def _codelength(level: _Level, assign: Sequence[int], const_term: float) -> float:
    n_orig = level.n_orig
    mods = sorted(set(assign))
    midx = {m: k for k, m in enumerate(mods)}
    K = len(mods)
    p_mod = np.zeros(K)
    telp_mod = np.zeros(K)
    cnt_mod = np.zeros(K)
    qlink = np.zeros(K)
    for x in range(level.n_entities):
        k = midx[assign[x]]
        p_mod[k] += level.p[x]
        telp_mod[k] += level.telp[x]
        cnt_mod[k] += level.cnt[x]
        ax = assign[x]
        for y, f in level.flows_out[x]:
            if assign[y] != ax:
                qlink[k] += f
    q_mod = qlink + telp_mod * (n_orig - cnt_mod) / n_orig
    total_q = float(q_mod.sum())
    L = _plogp(total_q) - const_term
    for k in range(K):
        L -= 2.0 * _plogp(q_mod[k])
        L += _plogp(p_mod[k] + q_mod[k])
    return L


def map_equation(assignment: Union[Mapping[int, int], Sequence[int]], network: FlowNetwork) -> float:
    """Two-level map equation codelength (bits) of a partition, from scratch."""
    n = network.n
    if isinstance(assignment, Mapping):
        unknown = [k for k in assignment if not (isinstance(k, (int, np.integer)) and 0 <= k < n)]
        if unknown:
            raise DataError(f"assignment references unknown node(s): {unknown[:5]}")
        if len(assignment) != n:
            missing = [k for k in range(n) if k not in assignment]
            raise DataError(f"assignment missing node(s): {missing[:5]}")
        assign = [assignment[k] for k in range(n)]
    else:
        assign = list(assignment)
        if len(assign) != n:
            raise DataError(f"assignment length {len(assign)} != n = {n}")
    level = _base_level(network)
    const_term = float(sum(_plogp(v) for v in network.node_visit_rates))
    return _codelength(level, assign, const_term)


def _local_moves(level: _Level, assign: list[int], rng: np.random.Generator) -> bool:
    """Greedy node-to-best-neighbor-module sweeps; mutates assign in place."""
    n_ent = level.n_entities
    n_orig = level.n_orig
    # compact labels
    labels = {}
    for x in range(n_ent):
        labels.setdefault(assign[x], len(labels))
    for x in range(n_ent):
        assign[x] = labels[assign[x]]
    size = n_ent + 1
    p_mod = [0.0] * size
    telp_mod = [0.0] * size
    cnt_mod = [0.0] * size
    qlink = [0.0] * size
    members = [0] * size
    for x in range(n_ent):
        a = assign[x]
        p_mod[a] += level.p[x]
        telp_mod[a] += level.telp[x]
        cnt_mod[a] += level.cnt[x]
        members[a] += 1
        for y, f in level.flows_out[x]:
            if assign[y] != a:
                qlink[a] += f
    free = [k for k in range(size) if members[k] == 0]

    def q_of(k: int) -> float:
        v = qlink[k] + telp_mod[k] * (n_orig - cnt_mod[k]) / n_orig
        return v if v > 0 else 0.0

    total_q = sum(q_of(k) for k in range(size))
    order = list(rng.permutation(n_ent))
    improved_any = False
    while True:
        improved = False
        for x in order:
            A = assign[x]
            if members[A] == 1 and not level.flows_out[x] and not level.flows_in[x]:
                continue
            to_f: dict[int, float] = defaultdict(float)
            from_f: dict[int, float] = defaultdict(float)
            for y, f in level.flows_out[x]:
                to_f[assign[y]] += f
            for y, f in level.flows_in[x]:
                from_f[assign[y]] += f
            px, telpx, cntx = level.p[x], level.telp[x], level.cnt[x]
            out_x = level.out_flow[x]

            qA = q_of(A)
            pqA = p_mod[A] + qA
            qlA2 = qlink[A] - (out_x - to_f.get(A, 0.0)) + from_f.get(A, 0.0)
            pA2 = p_mod[A] - px
            tA2 = telp_mod[A] - telpx
            cA2 = cnt_mod[A] - cntx
            qA2 = qlA2 + tA2 * (n_orig - cA2) / n_orig
            if qA2 < 0:
                qA2 = 0.0
            candidates = set(to_f) | set(from_f)
            candidates.discard(A)
            if members[A] > 1 and free:
                candidates.add(free[-1])
            if not candidates:
                continue
            dA = (
                -2.0 * (_plogp(qA2) - _plogp(qA))
                + (_plogp(pA2 + qA2) - _plogp(pqA))
            )
            best_delta = -_EPS_IMPROVE
            best_B = -1
            best_qB2 = 0.0
            for B in candidates:
                qB = q_of(B)
                qlB2 = qlink[B] + (out_x - to_f.get(B, 0.0)) - from_f.get(B, 0.0)
                pB2 = p_mod[B] + px
                tB2 = telp_mod[B] + telpx
                cB2 = cnt_mod[B] + cntx
                qB2 = qlB2 + tB2 * (n_orig - cB2) / n_orig
                if qB2 < 0:
                    qB2 = 0.0
                new_total = total_q - qA - qB + qA2 + qB2
                delta = (
                    _plogp(new_total) - _plogp(total_q)
                    + dA
                    - 2.0 * (_plogp(qB2) - _plogp(qB))
                    + (_plogp(pB2 + qB2) - _plogp(p_mod[B] + qB))
                )
                if delta < best_delta:
                    best_delta = delta
                    best_B = B
                    best_qB2 = qB2
            if best_B < 0:
                continue
            B = best_B
            if members[B] == 0:
                free.pop()
            qB_old = q_of(B)
            total_q += best_qB2 + qA2 - qA - qB_old
            qlink[A] = qlA2
            p_mod[A], telp_mod[A], cnt_mod[A] = pA2, tA2, cA2
            members[A] -= 1
            qlink[B] = qlink[B] + (out_x - to_f.get(B, 0.0)) - from_f.get(B, 0.0)
            p_mod[B] += px
            telp_mod[B] += telpx
            cnt_mod[B] += cntx
            members[B] += 1
            assign[x] = B
            if members[A] == 0:
                qlink[A] = 0.0
                free.append(A)
            improved = True
            improved_any = True
        if not improved:
            break
    return improved_any


def _aggregate(level: _Level, assign: Sequence[int]) -> tuple[dict[int, int], _Level]:
    """Collapse modules into super-entities, keeping inter-module flows."""
    label_of: dict[int, int] = {}
    for x in range(level.n_entities):
        if assign[x] not in label_of:
            label_of[assign[x]] = len(label_of)
    K = len(label_of)
    p = np.zeros(K)
    telp = np.zeros(K)
    cnt = np.zeros(K)
    flow_acc: list[dict[int, float]] = [defaultdict(float) for _ in range(K)]
    for x in range(level.n_entities):
        a = label_of[assign[x]]
        p[a] += level.p[x]
        telp[a] += level.telp[x]
        cnt[a] += level.cnt[x]
        for y, f in level.flows_out[x]:
            b = label_of[assign[y]]
            if b != a:
                flow_acc[a][b] += f
    flows_out: list[list[tuple[int, float]]] = [[] for _ in range(K)]
    flows_in: list[list[tuple[int, float]]] = [[] for _ in range(K)]
    for a in range(K):
        for b in sorted(flow_acc[a]):
            f = flow_acc[a][b]
            flows_out[a].append((b, f))
            flows_in[b].append((a, f))
    return label_of, _Level(K, level.n_orig, p, telp, cnt, flows_out, flows_in)


def _one_trial(level0: _Level, rng: np.random.Generator, max_rounds: int = 200) -> list[int]:
    assign = list(range(level0.n_entities))
    for _ in range(max_rounds):
        _local_moves(level0, assign, rng)
        label_of, level1 = _aggregate(level0, assign)
        sup_assign = list(range(level1.n_entities))
        if not _local_moves(level1, sup_assign, rng):
            break
        for x in range(level0.n_entities):
            assign[x] = sup_assign[label_of[assign[x]]]
    return assign


def _canonical(assign: Sequence[int]) -> tuple[int, ...]:
    relabel: dict[int, int] = {}
    out = []
    for a in assign:
        if a not in relabel:
            relabel[a] = len(relabel)
        out.append(relabel[a])
    return tuple(out)


def detect_communities(
    network: FlowNetwork,
    seed: int = 0,
    trials: int = 10,
    labels: Sequence[str] | None = None,
) -> CommunityPartition:
    """Best-of-trials map-equation minimization, deterministic in (seed, trials).

    Returns modules with contiguous ids from 1, ranked by descending summed
    visit rate (PageRank); rank ties broken by smallest member label.
    """
    if trials < 1:
        raise DataError(f"trials must be >= 1, got {trials}")
    level0 = _base_level(network)
    const_term = float(sum(_plogp(v) for v in network.node_visit_rates))
    n = network.n

    best_assign = [0] * n  # all-in-one baseline
    best_len = _codelength(level0, best_assign, const_term)
    best_canon = _canonical(best_assign)
    seeds = np.random.SeedSequence(seed).spawn(trials)
    for t in range(trials):
        rng = np.random.default_rng(seeds[t])
        assign = _one_trial(level0, rng)
        length = _codelength(level0, assign, const_term)
        canon = _canonical(assign)
        if length < best_len - _EPS_IMPROVE or (
            length <= best_len + _EPS_IMPROVE and canon < best_canon
        ):
            best_assign, best_len, best_canon = assign, length, canon

    groups: dict[int, list[int]] = defaultdict(list)
    for x, a in enumerate(best_assign):
        groups[a].append(x)
    pr = network.node_visit_rates

    def tie_key(mem: list[int]):
        if labels is not None:
            return min(labels[i] for i in mem)
        return min(mem)

    ranked = sorted(groups.values(), key=lambda mem: (-sum(pr[i] for i in mem), tie_key(mem)))
    assignment = np.zeros(n, dtype=int)
    for rank, mem in enumerate(ranked, start=1):
        for i in mem:
            assignment[i] = rank
    return CommunityPartition(
        assignment=assignment,
        codelength=float(best_len),
        members=[sorted(mem) for mem in ranked],
        pagerank_sums=[float(sum(pr[i] for i in mem)) for mem in ranked],
    )


def mean_neighbor_correlation(graph: PlanarGraph, sector_matrix: np.ndarray) -> np.ndarray:
    """Per-node average of sector-mode values over PMFG neighbors."""
    if sector_matrix.shape != (graph.n, graph.n):
        raise DataError(
            f"matrix shape {sector_matrix.shape} does not match graph n={graph.n}"
        )
    out = np.zeros(graph.n)
    for i in range(graph.n):
        neigh = graph.adjacency[i]
        if not neigh:
            raise DataError(f"node {i} is isolated; mean neighbor correlation undefined")
        out[i] = float(np.mean([sector_matrix[i, j] for j in neigh]))
    return out


def _prominent(roster: dict[str, int], sh_count: int, total: int,
               min_members: int, min_share: float) -> list[str]:
    items = list(roster.items()) + [("SH", sh_count)]
    keep = [
        (cnt, code)
        for code, cnt in items
        if cnt >= min_members and total > 0 and cnt / total >= min_share
    ]
    keep.sort(key=lambda t: (-t[0], t[1]))
    return [code for _, code in keep]


def community_report(
    partition: CommunityPartition,
    graph: PlanarGraph,
    sector_matrix: np.ndarray,
    network: FlowNetwork,
    sector_map: dict[str, tuple[str, bool]],
    k: int = 8,
    min_members: int = 3,
    min_share: float = 0.2,
) -> list[Community]:
    """Top-k communities by summed PageRank with per-sector rosters.

    The top-50% cut keeps ceil(n/2) members by descending PageRank (ties by
    ticker); a sector is reported as prominent when it has at least
    `min_members` members covering at least `min_share` of the roster.
    """
    if graph.tickers is None:
        raise DataError("graph has no tickers; community report needs sector lookup")
    if len(partition.assignment) != graph.n:
        raise DataError("partition and graph are inconsistent")
    cbar = mean_neighbor_correlation(graph, sector_matrix)
    pr = network.node_visit_rates
    tickers = graph.tickers
    report = []
    for rank, members in enumerate(partition.members[:k], start=1):
        n_stock = len(members)
        by_pr = sorted(members, key=lambda i: (-pr[i], tickers[i]))
        top50 = by_pr[: (n_stock + 1) // 2]
        roster_all: dict[str, int] = defaultdict(int)
        roster_top: dict[str, int] = defaultdict(int)
        sh_all = sh_top = 0
        for i in members:
            code, sh = sector_map[tickers[i]]
            roster_all[code] += 1
            sh_all += int(sh)
        for i in top50:
            code, sh = sector_map[tickers[i]]
            roster_top[code] += 1
            sh_top += int(sh)
        report.append(
            Community(
                rank=rank,
                members=list(members),
                tickers=[tickers[i] for i in members],
                n_stock=n_stock,
                sum_pagerank=float(sum(pr[i] for i in members)),
                sum_mean_corr=float(sum(cbar[i] for i in members)),
                top50_members=top50,
                sector_roster_all=dict(sorted(roster_all.items())),
                sector_roster_top50=dict(sorted(roster_top.items())),
                sh_count_all=sh_all,
                sh_count_top50=sh_top,
                prominent_all=_prominent(roster_all, sh_all, n_stock, min_members, min_share),
                prominent_top50=_prominent(roster_top, sh_top, len(top50), min_members, min_share),
            )
        )
    return report


def adjusted_rand_index(labels_a: Sequence[int], labels_b: Sequence[int]) -> float:
    """Chance-corrected agreement between two partitions of the same nodes."""
    if len(labels_a) != len(labels_b):
        raise DataError("partitions must cover the same nodes")
    n = len(labels_a)
    if n == 0:
        raise DataError("empty partitions")
    cont: dict[tuple[int, int], int] = defaultdict(int)
    count_a: dict[int, int] = defaultdict(int)
    count_b: dict[int, int] = defaultdict(int)
    for a, b in zip(labels_a, labels_b):
        cont[(a, b)] += 1
        count_a[a] += 1
        count_b[b] += 1

    def comb2(x: int) -> float:
        return x * (x - 1) / 2.0

    sum_ij = sum(comb2(c) for c in cont.values())
    sum_a = sum(comb2(c) for c in count_a.values())
    sum_b = sum(comb2(c) for c in count_b.values())
    total = comb2(n)
    expected = sum_a * sum_b / total if total else 0.0
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        return 1.0
    return (sum_ij - expected) / (max_index - expected)


# -- report serialization ----------------------------------------------------

def _roster_text(roster: dict[str, int], sh: int) -> str:
    parts = [f"{code}({cnt})" for code, cnt in sorted(roster.items(), key=lambda t: (-t[1], t[0]))]
    if sh:
        parts.append(f"SH({sh})")
    return " ".join(parts)


def write_community_csv(report: list[Community], path: Union[str, Path]) -> None:
    """Table of community rank, rosters, N_stock, sum c-bar, sum PageRank."""
    import csv as _csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(
            ["community", "top50_sectors", "total_sectors", "n_stock",
             "sum_mean_corr", "sum_pagerank"]
        )
        for c in report:
            writer.writerow(
                [
                    c.rank,
                    _roster_text(c.sector_roster_top50, c.sh_count_top50),
                    _roster_text(c.sector_roster_all, c.sh_count_all),
                    c.n_stock,
                    f"{c.sum_mean_corr:.6f}",
                    f"{c.sum_pagerank:.6f}",
                ]
            )


def write_community_json(
    partition: CommunityPartition,
    report: list[Community],
    path: Union[str, Path],
) -> None:
    doc = {
        "codelength_bits": partition.codelength,
        "n_modules": partition.n_modules,
        "pagerank_sums": partition.pagerank_sums,
        "communities": [
            {
                "rank": c.rank,
                "n_stock": c.n_stock,
                "sum_pagerank": c.sum_pagerank,
                "sum_mean_corr": c.sum_mean_corr,
                "tickers": c.tickers,
                "top50_tickers": [c.tickers[c.members.index(i)] for i in c.top50_members],
                "sector_roster_all": c.sector_roster_all,
                "sector_roster_top50": c.sector_roster_top50,
                "sh_count_all": c.sh_count_all,
                "sh_count_top50": c.sh_count_top50,
                "prominent_all": c.prominent_all,
                "prominent_top50": c.prominent_top50,
            }
            for c in report
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")
