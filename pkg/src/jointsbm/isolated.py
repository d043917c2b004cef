"""Per-graph spectral clustering with post-hoc label alignment.

Each graph is clustered on its own: k-means on the rows of its leading
eigenvectors. Labels of different graphs then mean nothing to each
other, so three alignment procedures are offered:

 - iso1: relabel every graph by descending within-community density of
   its estimated connectivity;
 - iso2: pool all graphs' cluster centres, k-means them into k meta
   centres, and relabel each node by the meta centre of its centre
   (communities of one graph may merge);
 - iso3: keep graph 1 as the anchor and relabel every other graph by
   the label permutation bringing its centres closest in Frobenius
   distance, searched exhaustively over all k! candidates.

iso1 and iso3 permute labels within each graph; iso2 is a genuine
reassignment. With a single graph there is nothing to align and every
procedure returns the raw labels.
"""

from __future__ import annotations

import itertools

from dataclasses import dataclass

import numpy as np

from .graphs import Adjacency, GraphDataset, Membership
from .metrics import ThetaEstimate, estimate_theta_single
from .spectral import adjacency_eigen

__all__ = [
    "IsoFit",
    "ALIGNMENT_METHODS",
    "kmeans",
    "fit_single",
    "align",
    "fit_isolated",
]

ALIGNMENT_METHODS = ("iso1", "iso2", "iso3")
_MAX_EXHAUSTIVE_K = 8


@dataclass(frozen=True)
class IsoFit:
    """Independent per-graph fits plus their cross-graph alignment."""

    memberships_raw: Membership
    memberships_aligned: Membership
    thetas: tuple[ThetaEstimate, ...]
    centers: tuple[np.ndarray, ...]
    alignment: str
    seed: int


def _lloyd(points, k, rng, max_iter):
    """One k-means run from a k-means++ style start.

    Returns labels, centres and the per-iteration WCSS trace, which is
    non-increasing by construction (empty clusters are reseeded with the
    farthest point, which can only lower the objective).
    """
    n = len(points)
    # D^2 seeding
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = points[rng.integers(n)]
        else:
            centers[j] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))

    labels = np.zeros(n, dtype=np.int64)
    trace = []
    for _ in range(max_iter):
        dist2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist2.argmin(axis=1)
        for j in range(k):
            if not (new_labels == j).any():
                # give the empty cluster the point that fits worst
                worst = int(np.argmax(dist2[np.arange(n), new_labels]))
                new_labels[worst] = j
                dist2[worst, :] = np.inf
                dist2[worst, j] = 0.0
        wcss = float(dist2[np.arange(n), new_labels].sum())
        trace.append(wcss)
        if (new_labels == labels).all() and len(trace) > 1:
            break
        labels = new_labels
        for j in range(k):
            centers[j] = points[labels == j].mean(axis=0)
    return labels, centers, np.array(trace)


def kmeans(points, k: int, seed: int = 0, max_iter: int = 100, n_restarts: int = 5):
    """Best-of-restarts k-means. Returns (labels, centers)."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    if not 1 <= k <= len(points):
        raise ValueError(f"k must lie in 1..{len(points)}")
    best = None
    for child in np.random.SeedSequence(seed).spawn(n_restarts):
        labels, centers, trace = _lloyd(
            points, k, np.random.default_rng(child), max_iter
        )
        if best is None or trace[-1] < best[2][-1]:
            best = (labels, centers, trace)
    return best[0], best[1]


def fit_single(
    adjacency: Adjacency,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    n_restarts: int = 5,
):
    """Spectral clustering of one graph: k-means on eigenvector rows."""
    pair = adjacency_eigen(adjacency, k)
    return kmeans(
        pair.vectors, k, seed=seed, max_iter=max_iter, n_restarts=n_restarts
    )


def _permute_theta(est: ThetaEstimate, order) -> ThetaEstimate:
    ix = np.ix_(order, order)
    return ThetaEstimate(
        probs=est.probs[ix], variance=est.variance[ix], missing=est.missing[ix]
    )


def _rank_map(order, k) -> np.ndarray:
    """order[j] = raw community at aligned position j -> relabel lookup."""
    ranks = np.empty(k, dtype=np.int64)
    ranks[np.asarray(order)] = np.arange(k)
    return ranks


def align(
    iso_raw: IsoFit, method: str, dataset: GraphDataset | None = None
) -> IsoFit:
    """Align per-graph labels with one of the three procedures.

    iso2 reassigns nodes, so the per-graph connectivity estimates must
    be recomputed and the original dataset is required.
    """
    if method not in ALIGNMENT_METHODS:
        raise ValueError(f"unknown alignment method {method!r}")
    raw = iso_raw.memberships_raw
    k = raw.k
    if raw.n_graphs == 1:
        return IsoFit(
            memberships_raw=raw,
            memberships_aligned=raw,
            thetas=iso_raw.thetas,
            centers=iso_raw.centers,
            alignment=method,
            seed=iso_raw.seed,
        )

    if method == "iso1":
        new_labels = []
        new_thetas = []
        for labels, est in zip(raw.labels_per_graph, iso_raw.thetas):
            diag = est.probs.diagonal().copy()
            diag[np.isnan(diag)] = -np.inf  # unestimable communities rank last
            order = np.argsort(-diag, kind="stable")
            new_labels.append(_rank_map(order, k)[labels])
            new_thetas.append(_permute_theta(est, order))
        aligned = Membership(labels_per_graph=tuple(new_labels), k=k)
        thetas = tuple(new_thetas)

    elif method == "iso2":
        if dataset is None:
            raise ValueError("iso2 needs the dataset to re-estimate connectivity")
        stacked = np.concatenate(iso_raw.centers, axis=0)
        meta_labels, _ = kmeans(stacked, k, seed=iso_raw.seed)
        new_labels = []
        for n, labels in enumerate(raw.labels_per_graph):
            lookup = meta_labels[n * k : (n + 1) * k]
            new_labels.append(lookup[labels])
        aligned = Membership(labels_per_graph=tuple(new_labels), k=k)
        thetas = tuple(
            estimate_theta_single(adj, labels, k)
            for adj, labels in zip(dataset, aligned.labels_per_graph)
        )

    else:  # iso3
        if k > _MAX_EXHAUSTIVE_K:
            raise ValueError(
                f"iso3 searches all k! permutations and refuses k > {_MAX_EXHAUSTIVE_K}"
            )
        anchor = iso_raw.centers[0]
        new_labels = [raw.labels_per_graph[0]]
        new_thetas = [iso_raw.thetas[0]]
        for labels, est, centers in zip(
            raw.labels_per_graph[1:], iso_raw.thetas[1:], iso_raw.centers[1:]
        ):
            best = None
            for perm in itertools.permutations(range(k)):
                order = np.array(perm)
                cost = float(((centers[order] - anchor) ** 2).sum())
                if best is None or cost < best[0]:
                    best = (cost, order)
            order = best[1]
            new_labels.append(_rank_map(order, k)[labels])
            new_thetas.append(_permute_theta(est, order))
        aligned = Membership(labels_per_graph=tuple(new_labels), k=k)
        thetas = tuple(new_thetas)

    return IsoFit(
        memberships_raw=raw,
        memberships_aligned=aligned,
        thetas=thetas,
        centers=iso_raw.centers,
        alignment=method,
        seed=iso_raw.seed,
    )


def fit_isolated(
    dataset: GraphDataset,
    k: int,
    method: str = "iso1",
    seed: int = 0,
    max_iter: int = 100,
    n_restarts: int = 5,
) -> IsoFit:
    """Cluster each graph independently, then align labels across graphs."""
    if method not in ALIGNMENT_METHODS:
        raise ValueError(f"unknown alignment method {method!r}")
    if k > min(dataset.sizes):
        raise ValueError("k exceeds the smallest graph")
    labels_per_graph = []
    centers = []
    thetas = []
    for child, adj in zip(np.random.SeedSequence(seed).spawn(len(dataset)), dataset):
        child_seed = int(child.generate_state(1)[0])
        labels, cents = fit_single(
            adj, k, seed=child_seed, max_iter=max_iter, n_restarts=n_restarts
        )
        labels_per_graph.append(labels)
        centers.append(cents)
        thetas.append(estimate_theta_single(adj, labels, k))
    raw = Membership(labels_per_graph=tuple(labels_per_graph), k=k)
    skeleton = IsoFit(
        memberships_raw=raw,
        memberships_aligned=raw,
        thetas=tuple(thetas),
        centers=tuple(centers),
        alignment="none",
        seed=seed,
    )
    return align(skeleton, method, dataset)
