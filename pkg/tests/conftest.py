import itertools

import numpy as np
import pytest

from tlwalk import data_file
from tlwalk.graph import from_edges, load_edge_list


def clique_edges(nodes):
    return list(itertools.combinations(nodes, 2))


def two_cliques(k, bridge=False):
    """Two k-cliques on ids 0..k-1 and k..2k-1, optionally joined by (k-1, k)."""
    e = clique_edges(range(k)) + clique_edges(range(k, 2 * k))
    if bridge:
        e.append((k - 1, k))
    return from_edges(e, 2 * k)


def planted_graph(n, p_in, p_out, seed, min_cross=1):
    """Two-community random graph on ``n`` nodes with labels 0/1 by halves.

    Redraws until the graph has no isolated nodes and at least ``min_cross``
    cross edges.
    """
    rng = np.random.default_rng(seed)
    half = n // 2
    truth = np.r_[np.zeros(half, int), np.ones(n - half, int)]
    while True:
        e = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < (p_in if truth[i] == truth[j] else p_out)]
        g = from_edges(e, n)
        cross = sum(truth[i] != truth[j] for i, j in e)
        if g.degrees().min() > 0 and cross >= min_cross:
            return g, truth


@pytest.fixture
def barbell():
    return load_edge_list(data_file("barbell.edges"))


@pytest.fixture
def barbell_partition(barbell):
    from tlwalk.community import Partition
    return Partition.from_labels([0 if lab in "abc" else 1 for lab in barbell.labels], barbell)


@pytest.fixture(scope="session")
def karate():
    return load_edge_list(data_file("karate.edges"))
