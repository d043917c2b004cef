"""Synthetic multi-graph sampler with a shared blockmodel.

The generative process: a global k x k connectivity matrix Theta is
fixed; each graph draws its own community proportions pi_n from a
symmetric Dirichlet with concentration 1/(alpha*k), assigns node labels
iid from pi_n, and then samples every unordered node pair once as an
independent Bernoulli with probability Theta[label_i, label_j].

Small alpha makes graphs near-uniform over communities (homogeneous
ensembles); large alpha makes per-graph proportions erratic. Graph
sizes can be fixed, listed explicitly, or drawn from a negative
binomial with mean mu and dispersion r (variance mu + mu^2/r), clamped
below at one node.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .graphs import Adjacency, GraphDataset, Membership, save_dataset, save_membership

__all__ = [
    "Connectivity",
    "NegativeBinomialSizes",
    "GeneratorConfig",
    "planted_partition",
    "sample_pi",
    "sample_sizes",
    "sample_graph",
    "generate",
    "save_generated",
    "load_theta",
    "save_theta",
]


@dataclass(frozen=True)
class Connectivity:
    """Symmetric k x k matrix of within/between community edge probabilities."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[0] != probs.shape[1]:
            raise ValueError("connectivity must be a square matrix")
        if not np.allclose(probs, probs.T, atol=1e-12):
            raise ValueError("connectivity must be symmetric")
        if probs.min() < 0.0 or probs.max() > 1.0:
            raise ValueError("edge probabilities must lie in [0, 1]")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def k(self) -> int:
        return self.probs.shape[0]


def planted_partition(k: int, within: float, between: float) -> Connectivity:
    """Constant ``within`` on the diagonal, ``between`` everywhere else."""
    if k < 1:
        raise ValueError("k must be positive")
    probs = np.full((k, k), float(between))
    np.fill_diagonal(probs, float(within))
    return Connectivity(probs=probs)


@dataclass(frozen=True)
class NegativeBinomialSizes:
    """Graph-size law: negative binomial with mean mu, dispersion r."""

    mu: float
    r: float

    def __post_init__(self):
        if self.mu <= 0 or self.r <= 0:
            raise ValueError("mu and r must be positive")


@dataclass(frozen=True)
class GeneratorConfig:
    """Everything needed to sample one dataset reproducibly.

    ``sizes`` is a fixed node count, an explicit per-graph list, or a
    :class:`NegativeBinomialSizes` law.
    """

    n_graphs: int
    sizes: int | Sequence[int] | NegativeBinomialSizes
    alpha: float
    theta: Connectivity
    seed: int = 0

    def __post_init__(self):
        if self.n_graphs < 1:
            raise ValueError("n_graphs must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        sizes = self.sizes
        if isinstance(sizes, NegativeBinomialSizes):
            pass
        elif isinstance(sizes, (int, np.integer)):
            if sizes < 1:
                raise ValueError("graph size must be positive")
        else:
            sizes = tuple(int(s) for s in sizes)
            if len(sizes) != self.n_graphs:
                raise ValueError("explicit sizes must list one entry per graph")
            if min(sizes) < 1:
                raise ValueError("graph sizes must be positive")
            object.__setattr__(self, "sizes", sizes)


def sample_pi(alpha: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Community proportions from Dirichlet(1/(alpha*k), ..., 1/(alpha*k))."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if k < 2:
        raise ValueError("k must be at least 2")
    return rng.dirichlet(np.full(k, 1.0 / (alpha * k)))


def sample_sizes(
    n_graphs: int, mu: float, r: float, rng: np.random.Generator
) -> list[int]:
    """Negative-binomial graph sizes, clamped below at one node."""
    if n_graphs < 1:
        raise ValueError("n_graphs must be positive")
    if mu <= 0 or r <= 0:
        raise ValueError("mu and r must be positive")
    p = r / (r + mu)
    draws = rng.negative_binomial(r, p, size=n_graphs)
    return [int(max(d, 1)) for d in draws]


def sample_graph(labels, theta: Connectivity, rng: np.random.Generator) -> Adjacency:
    """One graph: every unordered pair is an independent Bernoulli draw."""
    labels = np.asarray(labels, dtype=np.int64)
    probs = theta.probs if isinstance(theta, Connectivity) else np.asarray(theta)
    if labels.size and labels.max() >= probs.shape[0]:
        raise ValueError("label outside connectivity range")
    n = len(labels)
    iu, iv = np.triu_indices(n, k=1)
    p = probs[labels[iu], labels[iv]]
    keep = rng.random(p.shape) < p
    edges = np.column_stack([iu[keep], iv[keep]])
    return Adjacency(n_nodes=n, edges=edges)


def generate(config: GeneratorConfig) -> tuple[GraphDataset, Membership, Connectivity]:
    """Sample a dataset plus its true membership.

    Each graph consumes an independent substream of the seed, so
    regenerating with the same config is bit-reproducible and inserting
    a graph does not perturb the others.
    """
    k = config.theta.k
    root = np.random.SeedSequence(config.seed)
    size_stream, *graph_streams = root.spawn(config.n_graphs + 1)

    sizes = config.sizes
    if isinstance(sizes, NegativeBinomialSizes):
        sizes = sample_sizes(
            config.n_graphs, sizes.mu, sizes.r, np.random.default_rng(size_stream)
        )
    elif isinstance(sizes, (int, np.integer)):
        sizes = [int(sizes)] * config.n_graphs

    graphs = []
    labels_per_graph = []
    for n_nodes, stream in zip(sizes, graph_streams):
        rng = np.random.default_rng(stream)
        pi = sample_pi(config.alpha, k, rng)
        labels = rng.choice(k, size=n_nodes, p=pi)
        graphs.append(sample_graph(labels, config.theta, rng))
        labels_per_graph.append(labels)

    dataset = GraphDataset(graphs=tuple(graphs))
    membership = Membership(labels_per_graph=tuple(labels_per_graph), k=k)
    return dataset, membership, config.theta


def save_theta(theta: Connectivity, path) -> Path:
    """K rows of K comma-separated probabilities, no header."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in theta.probs:
            writer.writerow([repr(float(x)) for x in row])
    return path


def load_theta(path) -> Connectivity:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.reader(fh):
            if rec:
                rows.append([float(x) for x in rec])
    if not rows:
        raise ValueError(f"{path}: empty connectivity file")
    return Connectivity(probs=np.array(rows))


def save_generated(
    out_dir,
    dataset: GraphDataset,
    membership: Membership,
    theta: Connectivity,
) -> Path:
    """Write manifest + edge lists + truth.csv + theta_true.csv."""
    out = Path(out_dir)
    manifest = save_dataset(dataset, out, k_hint=membership.k)
    save_membership(membership, out / "truth.csv")
    save_theta(theta, out / "theta_true.csv")
    return manifest
