"""Joint community estimation across graphs by alternating minimisation.

Each graph contributes scaled spectral rows (its QStar embedding); all
graphs share one k x k centre matrix W. The fit alternates between

 - a closed-form update of W: per-community weighted means of the
   embedding rows, each graph weighted by gamma_n, the trace of its
   local-to-overall count ratios; and
 - per-node reassignment minimising omega, a distance to each candidate
   centre whose weights anticipate how the move shifts the count ratios.

Count bookkeeping is deliberately stale inside a pass: node moves see
the community sizes from the start of the iteration, per-graph sizes
are refreshed after that graph's sweep and the overall sizes only after
all graphs. The loss recorded per iteration is the eta sum evaluated
with the post-sweep counts. The loss is not guaranteed monotone, so
non-monotone steps are logged rather than asserted away; convergence is
declared when consecutive losses agree within epsilon.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .graphs import GraphDataset, Membership
from .spectral import adjacency_eigen, q_star

__all__ = [
    "FitOptions",
    "JointFit",
    "gamma",
    "update_w",
    "delta_tilde",
    "omega",
    "eta",
    "fit_joint",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitOptions:
    """Knobs for the alternating fit."""

    k: int
    epsilon: float = 1e-6
    max_iter: int = 100
    n_restarts: int = 5
    seed: int = 0
    parallel_sweep: bool = False

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be positive")


@dataclass(frozen=True)
class JointFit:
    """Result of the best restart: memberships, centres, loss history."""

    membership: Membership
    w: np.ndarray
    loss_trace: np.ndarray
    gammas: np.ndarray
    iterations: int
    converged: bool
    seed: int
    n_loss_increases: int = 0
    parallel_sweep: bool = False


def gamma(counts_n, counts_overall) -> float:
    """Graph weight: sum over communities of local over overall size."""
    local = np.asarray(counts_n, dtype=float)
    total = np.asarray(counts_overall, dtype=float)
    if (total <= 0).any():
        raise ValueError("overall community sizes must all be positive")
    return float(np.sum(local / total))


def update_w(
    membership: Membership, q_stars: Sequence[np.ndarray], gammas
) -> np.ndarray:
    """Gamma-weighted per-community means of the embedding rows."""
    gammas = np.asarray(gammas, dtype=float)
    k = membership.k
    dim = np.asarray(q_stars[0]).shape[1]
    num = np.zeros((k, dim))
    den = np.zeros(k)
    for labels, rows, g in zip(membership.labels_per_graph, q_stars, gammas):
        rows = np.asarray(rows, dtype=float)
        den += g * np.bincount(labels, minlength=k)
        np.add.at(num, labels, g * rows)
    if (den <= 0).any():
        raise ValueError("a community has zero total weight; reseed it first")
    return num / den[:, None]


def delta_tilde(counts_overall, counts_n, from_l: int, to_k: int) -> np.ndarray:
    """Per-community size ratios after moving one node from_l -> to_k.

    Returns the square roots of (adjusted local counts) / (adjusted
    overall counts). The adjusted overall counts must stay positive;
    hitting zero means a community is about to vanish and the caller
    must reseed instead.
    """
    local = np.asarray(counts_n, dtype=float).copy()
    total = np.asarray(counts_overall, dtype=float).copy()
    if local[from_l] < 1:
        raise ValueError("graph has no node in the source community")
    local[from_l] -= 1.0
    local[to_k] += 1.0
    total[from_l] -= 1.0
    total[to_k] += 1.0
    if (total < 1).any():
        raise ValueError("a community would be left empty; reseed it first")
    return np.sqrt(local / total)


def omega(w_row, q_row, dt, size_ratio: float) -> float:
    """Reassignment cost of putting one embedding row on one centre."""
    w_row = np.asarray(w_row, dtype=float)
    q_row = np.asarray(q_row, dtype=float)
    dt = np.asarray(dt, dtype=float)
    diff = w_row - q_row
    spread = np.abs(q_row) * (dt + size_ratio)
    return float(diff @ diff * np.sum(dt * dt) + spread @ spread)


def eta(labels_n, w, q_star_n, counts_n, counts_overall, size_ratio: float) -> float:
    """One graph's loss term at the current assignment and centres."""
    labels_n = np.asarray(labels_n, dtype=np.int64)
    w = np.asarray(w, dtype=float)
    rows = np.asarray(q_star_n, dtype=float)
    g = gamma(counts_n, counts_overall)
    resid = w[labels_n] - rows
    dt = np.sqrt(np.asarray(counts_n, float) / np.asarray(counts_overall, float))
    spread = np.abs(rows) * (dt + size_ratio)[None, :]
    return float(g * np.sum(resid * resid) + np.sum(spread * spread))


# ---------------------------------------------------------------------------
# sweep internals


def _guarded_ratios(local, total) -> np.ndarray:
    """sqrt(local/total) with 0/0 read as 0 (an absent community costs nothing)."""
    local = np.asarray(local, dtype=float)
    total = np.asarray(total, dtype=float)
    out = np.zeros_like(local)
    np.divide(np.maximum(local, 0.0), total, out=out, where=total > 0)
    return np.sqrt(out)


def _move_tensors(counts_n, counts_overall, k, size_ratio):
    """Delta-tilde derived weights for every (current l, candidate c) pair.

    Returns tr[l, c] = sum of squared ratios and b2[l, c, m], the squared
    per-coordinate spread weights.
    """
    shift = np.zeros((k, k, k))
    shift -= np.eye(k)[:, None, :]  # leaving community l
    shift += np.eye(k)[None, :, :]  # joining community c
    local = counts_n[None, None, :] + shift
    total = counts_overall[None, None, :] + shift
    ratios = np.zeros_like(local)
    np.divide(np.maximum(local, 0.0), total, out=ratios, where=total > 0)
    tr = ratios.sum(axis=2)
    b2 = (np.sqrt(ratios) + size_ratio) ** 2
    return tr, b2


def _assign_graph(q, labels, counts_n, counts_overall, w, size_ratio):
    """Vectorised node reassignment for one graph against frozen counts."""
    k = w.shape[0]
    tr, b2 = _move_tensors(
        counts_n.astype(float), counts_overall.astype(float), k, size_ratio
    )
    dist2 = ((q[:, None, :] - w[None, :, :]) ** 2).sum(axis=2)
    second = np.empty_like(dist2)
    q2 = q * q
    for l in np.unique(labels):
        mask = labels == l
        second[mask] = q2[mask] @ b2[l].T
    om = dist2 * tr[labels] + second
    return om.argmin(axis=1)


def _assign_graph_slow(q, labels, counts_n, counts_overall, w, size_ratio):
    """Literal per-node sweep; the reference the fast path must match."""
    k = w.shape[0]
    new = labels.copy()
    for i in range(len(labels)):
        l = int(new[i])
        costs = np.empty(k)
        for c in range(k):
            move = np.zeros(k)
            move[l] -= 1.0
            move[c] += 1.0
            dt = _guarded_ratios(counts_n + move, counts_overall + move)
            costs[c] = omega(w[c], q[i], dt, size_ratio)
        new[i] = int(np.argmin(costs))
    return new


def _no_move_omegas(q, labels, counts_n, counts_overall, w, size_ratio):
    """Cost of every node against its own current centre."""
    dt = _guarded_ratios(counts_n, counts_overall)
    tr = float(np.sum(dt * dt))
    resid = w[labels] - q
    spread = np.abs(q) * (dt + size_ratio)[None, :]
    return (resid * resid).sum(axis=1) * tr + (spread * spread).sum(axis=1)


def _reseed_empty(labels_list, qs, ratios, per, overall, w, k):
    """Re-seed every empty community with the worst-fitting eligible node.

    Eligible means the node's current community keeps at least one
    member overall after the move. Mutates labels and counts in place.
    """
    if w is None:
        # before the first centre update: plain per-community means
        stacked = np.concatenate(qs)
        all_labels = np.concatenate(labels_list)
        w = np.zeros((k, qs[0].shape[1]))
        filled = np.bincount(all_labels, minlength=k).astype(float)
        np.add.at(w, all_labels, stacked)
        w[filled > 0] /= filled[filled > 0, None]
    guard = 0
    while True:
        empties = np.flatnonzero(overall == 0)
        if empties.size == 0:
            return
        guard += 1
        if guard > k + 1:
            raise RuntimeError("reseeding failed to fill every community")
        target = int(empties[0])
        best = None
        for n, (labels, q) in enumerate(zip(labels_list, qs)):
            om = _no_move_omegas(q, labels, per[n], overall, w, ratios[n])
            eligible = overall[labels] >= 2
            if not eligible.any():
                continue
            om = np.where(eligible, om, -np.inf)
            i = int(np.argmax(om))
            if best is None or om[i] > best[0]:
                best = (float(om[i]), n, i)
        if best is None:
            raise RuntimeError("no eligible node to reseed an empty community")
        _, n, i = best
        old = int(labels_list[n][i])
        labels_list[n][i] = target
        per[n][old] -= 1
        per[n][target] += 1
        overall[old] -= 1
        overall[target] += 1
        log.debug("reseeded community %d with node %d of graph %d", target, i, n)


def _run_restart(
    qs: list[np.ndarray],
    ratios: list[float],
    k: int,
    epsilon: float,
    max_iter: int,
    rng: np.random.Generator,
    assign: Callable,
    executor: ThreadPoolExecutor | None,
):
    labels_list = [rng.integers(0, k, size=len(q)) for q in qs]
    per = np.stack([np.bincount(lab, minlength=k) for lab in labels_list])
    overall = per.sum(axis=0)
    _reseed_empty(labels_list, qs, ratios, per, overall, None, k)

    trace: list[float] = []
    w = None
    gammas_now = None
    converged = False
    increases = 0
    for _ in range(max_iter):
        gammas_now = (per / overall[None, :]).sum(axis=1)
        w = _weighted_means(labels_list, qs, gammas_now, k)

        # node moves all see the counts frozen at the top of the iteration
        sweep = lambda n: assign(
            qs[n], labels_list[n], per[n], overall, w, ratios[n]
        )
        if executor is not None:
            new_labels = list(executor.map(sweep, range(len(qs))))
        else:
            new_labels = [sweep(n) for n in range(len(qs))]
        labels_list = [np.asarray(lab, dtype=np.int64) for lab in new_labels]
        per = np.stack([np.bincount(lab, minlength=k) for lab in labels_list])
        overall = per.sum(axis=0)
        _reseed_empty(labels_list, qs, ratios, per, overall, w, k)

        loss = sum(
            eta(labels_list[n], w, qs[n], per[n], overall, ratios[n])
            for n in range(len(qs))
        )
        gammas_now = (per / overall[None, :]).sum(axis=1)
        if trace and loss > trace[-1]:
            increases += 1
            log.debug("loss rose from %.6g to %.6g", trace[-1], loss)
        trace.append(loss)
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) <= epsilon:
            converged = True
            break
    return labels_list, w, trace, gammas_now, converged, increases


def _weighted_means(labels_list, qs, gammas, k):
    dim = qs[0].shape[1]
    num = np.zeros((k, dim))
    den = np.zeros(k)
    for labels, rows, g in zip(labels_list, qs, gammas):
        den += g * np.bincount(labels, minlength=k)
        np.add.at(num, labels, g * rows)
    return num / den[:, None]


def fit_joint(
    dataset: GraphDataset, options: FitOptions, *, _assign: Callable | None = None
) -> JointFit:
    """Fit shared communities to every graph of the dataset.

    Spectral embeddings are computed once per graph; each restart draws
    an independent random initial membership and the restart with the
    lowest final loss wins (ties keep the earliest).
    """
    k = options.k
    if k > min(dataset.sizes):
        raise ValueError("k exceeds the smallest graph")
    total = dataset.total_nodes
    pairs = [adjacency_eigen(adj, k) for adj in dataset]
    qs = [q_star(p, adj.n_nodes, total).rows for p, adj in zip(pairs, dataset)]
    ratios = [float(np.sqrt(adj.n_nodes / total)) for adj in dataset]

    assign = _assign or _assign_graph
    executor = None
    if options.parallel_sweep and len(dataset) > 1:
        executor = ThreadPoolExecutor(max_workers=min(len(dataset), 8))
    try:
        best = None
        for child in np.random.SeedSequence(options.seed).spawn(options.n_restarts):
            out = _run_restart(
                qs,
                ratios,
                k,
                options.epsilon,
                options.max_iter,
                np.random.default_rng(child),
                assign,
                executor,
            )
            if best is None or out[2][-1] < best[2][-1]:
                best = out
    finally:
        if executor is not None:
            executor.shutdown()

    labels_list, w, trace, gammas_now, converged, increases = best
    membership = Membership(
        labels_per_graph=tuple(labels_list), k=k
    )
    return JointFit(
        membership=membership,
        w=w,
        loss_trace=np.array(trace),
        gammas=np.asarray(gammas_now, dtype=float),
        iterations=len(trace),
        converged=converged,
        seed=options.seed,
        n_loss_increases=increases,
        parallel_sweep=options.parallel_sweep,
    )
