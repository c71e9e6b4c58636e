"""Independent reference implementations used to verify the package.

Everything here is deliberately brute force or textbook-style so it shares
no code path with the implementations under test.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict

import numpy as np


# -- planarity: exhaustive Kuratowski-subdivision search ----------------------

def brute_force_is_planar(n: int, edges: list[tuple[int, int]]) -> bool:
    """Exact planarity by searching for K5/K3,3 subdivisions (small n only)."""
    m = len(edges)
    if n >= 3 and m > 3 * n - 6:
        return False
    if m < 9:
        return True
    adj: dict[int, set[int]] = defaultdict(set)
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    nodes = sorted(adj)
    if _has_k5_subdivision(nodes, adj) or _has_k33_subdivision(nodes, adj):
        return False
    return True


def _disjoint_paths(pairs, branch, adj, spares):
    """Internally-disjoint paths for every pair, internals drawn from spares."""
    used = set()

    def connect(idx: int) -> bool:
        if idx == len(pairs):
            return True
        a, b = pairs[idx]

        def walk(cur, internal):
            if b in adj[cur]:
                if connect(idx + 1):
                    return True
            for w in adj[cur]:
                if w in spares and w not in used and w not in internal:
                    internal.add(w)
                    used.add(w)
                    if walk(w, internal):
                        return True
                    internal.discard(w)
                    used.discard(w)
            return False

        return walk(a, set())

    return connect(0)


def _has_k5_subdivision(nodes, adj) -> bool:
    cand = [v for v in nodes if len(adj[v]) >= 4]
    for branch in itertools.combinations(cand, 5):
        bset = set(branch)
        spares = {v for v in nodes if v not in bset}
        pairs = list(itertools.combinations(branch, 2))
        if _disjoint_paths(pairs, bset, adj, spares):
            return True
    return False


def _has_k33_subdivision(nodes, adj) -> bool:
    cand = [v for v in nodes if len(adj[v]) >= 3]
    for six in itertools.combinations(cand, 6):
        sset = set(six)
        spares = {v for v in nodes if v not in sset}
        rest = six[1:]
        for two in itertools.combinations(rest, 2):
            side_a = (six[0],) + two
            side_b = tuple(v for v in six if v not in side_a)
            pairs = [(a, b) for a in side_a for b in side_b]
            if _disjoint_paths(pairs, sset, adj, spares):
                return True
    return False


# -- planarity: Euler certificate over an explicit embedding ------------------

def verify_planar_embedding(n: int, edges: list[tuple[int, int]]) -> bool:
    """Validate planarity through an embedding certificate.

    Asks networkx for a combinatorial embedding, then independently walks its
    faces and checks Euler's formula v - e + f = 1 + (number of components) + 1.
    A bogus embedding cannot satisfy the count, so this does not simply trust
    the planarity verdict.
    """
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    ok, embedding = nx.check_planarity(g)
    if not ok:
        return False
    data = embedding.get_data()
    half = [(u, v) for u in data for v in data[u]]
    if len(half) != 2 * len(edges):
        return False
    index_of = {u: {v: k for k, v in enumerate(data[u])} for u in data}
    visited = set()
    faces = 0
    for he in half:
        if he in visited:
            continue
        faces += 1
        cur = he
        while cur not in visited:
            visited.add(cur)
            u, v = cur
            ring = data[v]
            w = ring[(index_of[v][u] + 1) % len(ring)]
            cur = (v, w)
        if cur != he:
            return False  # walked into a previously visited face: broken ring
    n_components = nx.number_connected_components(g)
    isolated = sum(1 for u in data if not data[u])
    # per non-isolated component Euler gives f_c = e_c - v_c + 2
    return faces == len(edges) - (n - isolated) + 2 * (n_components - isolated)


# -- MST (Kruskal) over an explicit candidate ordering ------------------------

def kruskal_mst(n: int, ordered_pairs: list[tuple[int, int]]) -> set[tuple[int, int]]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    out = set()
    for i, j in ordered_pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            out.add((min(i, j), max(i, j)))
        if len(out) == n - 1:
            break
    return out


# -- PageRank by dense power iteration ----------------------------------------

def pagerank_power_iteration(weights: np.ndarray, damping: float,
                             tol: float = 1e-14, max_iter: int = 1_000_000) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    strength = w.sum(axis=1)
    P = np.zeros((n, n))
    for i in range(n):
        if strength[i] > 0:
            P[i] = w[i] / strength[i]
        else:
            P[i] = 1.0 / n
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        new = (1.0 - damping) / n + damping * (P.T @ x)
        if np.abs(new - x).sum() < tol:
            x = new
            break
        x = new
    return x / x.sum()


# -- set partitions (restricted growth strings) --------------------------------

def all_partitions(n: int):
    """Every partition of {0..n-1} as an assignment list."""
    a = [0] * n

    def rec(i: int, mx: int):
        if i == n:
            yield list(a)
            return
        for v in range(mx + 2):
            a[i] = v
            yield from rec(i + 1, max(mx, v))

    yield from rec(1, 0) if n > 0 else iter([[]])


def exhaustive_min_codelength(network, map_equation) -> tuple[float, list[int]]:
    best = math.inf
    best_assign: list[int] = []
    for assign in all_partitions(network.n):
        L = map_equation(assign, network)
        if L < best - 1e-12:
            best = L
            best_assign = list(assign)
    return best, best_assign


# -- scalar Pearson correlation ------------------------------------------------

def pearson_scalar(x, y) -> float:
    x = list(map(float, x))
    y = list(map(float, y))
    L = len(x)
    mx = sum(x) / L
    my = sum(y) / L
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y)) / L
    sx = math.sqrt(sum((a - mx) ** 2 for a in x) / L)
    sy = math.sqrt(sum((b - my) ** 2 for b in y) / L)
    return cov / (sx * sy)
