"""Shared builders for randomised instances used across the suite."""
import numpy as np
import pytest

from jointsbm.generate import Connectivity, sample_graph
from jointsbm.graphs import Adjacency, GraphDataset, Membership


def random_connectivity(rng: np.random.Generator, k: int) -> Connectivity:
    """Symmetric connectivity with entries in [0.05, 0.95]; full rank a.s."""
    m = rng.uniform(0.05, 0.95, size=(k, k))
    return Connectivity((m + m.T) / 2)


def random_instance(rng: np.random.Generator, max_k=4, max_size=30, max_graphs=4):
    """A random (membership, theta) pair with every community present
    in every graph, suitable for population-level identities."""
    k = int(rng.integers(2, max_k + 1))
    n_graphs = int(rng.integers(1, max_graphs + 1))
    labels = []
    for _ in range(n_graphs):
        size = int(rng.integers(k, max_size + 1))
        while True:
            l = rng.integers(0, k, size=size)
            if len(np.unique(l)) == k:
                break
        labels.append(l)
    return Membership(tuple(labels), k), random_connectivity(rng, k)


def dataset_from_labels(labels_per_graph, theta: Connectivity, rng) -> GraphDataset:
    graphs = tuple(
        sample_graph(np.asarray(l), theta.probs, rng) for l in labels_per_graph
    )
    return GraphDataset(graphs)


def two_clique_graph(size_a: int, size_b: int) -> Adjacency:
    """Two disjoint cliques; block-diagonal and fully deterministic."""
    edges = []
    for lo, hi in ((0, size_a), (size_a, size_a + size_b)):
        for i in range(lo, hi):
            for j in range(i + 1, hi):
                edges.append((i, j))
    return Adjacency(n_nodes=size_a + size_b, edges=np.array(edges, dtype=np.int64))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
