"""Planarity test vs networkx and the brute-force Kuratowski oracle."""

import itertools
import random

import networkx as nx
import pytest

from stocknets.planarity import is_planar

from oracles import brute_force_is_planar


def nx_planar(n, edges):
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    ok, _ = nx.check_planarity(g)
    return ok


K5 = list(itertools.combinations(range(5), 2))
K33 = [(i, j + 3) for i in range(3) for j in range(3)]
PETERSEN = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (5, 7), (7, 9), (9, 6),
            (6, 8), (8, 5), (0, 5), (1, 6), (2, 7), (3, 8), (4, 9)]


@pytest.mark.parametrize(
    "n,edges,expected",
    [
        (5, K5, False),
        (6, K33, False),
        (10, PETERSEN, False),
        (4, list(itertools.combinations(range(4), 2)), True),
        (5, K5[:-1], True),
        (6, K33[:-1], True),
        (3, [(0, 1), (1, 2), (2, 0)], True),
        (6, [(0, 1), (2, 3)], True),
        (1, [], True),
    ],
)
def test_known_graphs(n, edges, expected):
    assert is_planar(n, edges) is expected


def test_rejects_self_loop_and_duplicate():
    with pytest.raises(ValueError):
        is_planar(3, [(0, 0)])
    with pytest.raises(ValueError):
        is_planar(3, [(0, 1), (1, 0)])


def test_matches_networkx_on_random_graphs():
    rng = random.Random(4242)
    for _ in range(1500):
        n = rng.randint(5, 26)
        maxm = n * (n - 1) // 2
        m = rng.randint(n - 2, min(maxm, 3 * n - 6 + rng.randint(0, 4)))
        edges = rng.sample(list(itertools.combinations(range(n), 2)), m)
        assert is_planar(n, edges) == nx_planar(n, edges), (n, edges)


def test_matches_networkx_on_tree_plus_chords():
    rng = random.Random(7)
    for _ in range(300):
        n = rng.randint(6, 22)
        tree = nx.random_labeled_tree(n, seed=rng.randint(0, 10**9))
        edges = list(tree.edges())
        existing = {frozenset(e) for e in edges}
        pool = [e for e in itertools.combinations(range(n), 2) if frozenset(e) not in existing]
        rng.shuffle(pool)
        edges += pool[: rng.randint(0, 2 * n)]
        assert is_planar(n, edges) == nx_planar(n, edges)


def test_matches_brute_force_oracle_small_graphs():
    rng = random.Random(11)
    for _ in range(400):
        n = rng.randint(5, 9)
        maxm = n * (n - 1) // 2
        m = rng.randint(4, maxm)
        edges = rng.sample(list(itertools.combinations(range(n), 2)), m)
        assert is_planar(n, edges) == brute_force_is_planar(n, edges), (n, edges)


def test_disconnected_components():
    rng = random.Random(3)
    for _ in range(100):
        n1, n2 = rng.randint(5, 10), rng.randint(5, 10)
        e1 = rng.sample(list(itertools.combinations(range(n1), 2)),
                        min(3 * n1 - 5, n1 * (n1 - 1) // 2))
        e2 = rng.sample(list(itertools.combinations(range(n2), 2)),
                        min(3 * n2 - 5, n2 * (n2 - 1) // 2))
        edges = e1 + [(u + n1, v + n1) for u, v in e2]
        assert is_planar(n1 + n2, edges) == nx_planar(n1 + n2, edges)
