"""Connectivity estimators and clustering quality metrics.

Handles:
 - moment estimation of the connectivity matrix from one labelled graph,
   with the small-sample diagonal correction and its sampling variance;
 - pooling of per-graph estimates across a dataset;
 - partition agreement scores: NMI, ARI, misclustering rate;
 - stability of repeated assignments via per-key label entropy.

NMI here is mutual information in nats normalised by the arithmetic
mean of the two label entropies. Other normalisations (min, max,
geometric mean) give different numbers; comparisons against other code
should check the convention first.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graphs import Adjacency, GraphDataset, Membership

__all__ = [
    "ThetaEstimate",
    "estimate_theta_single",
    "estimate_theta_pooled",
    "theta_variance",
    "sse",
    "nmi",
    "ari",
    "mcr",
    "best_label_matching",
    "overall_nmi",
    "individual_nmis",
    "align_membership",
    "assignment_entropy",
    "EvalReport",
    "evaluate_membership",
    "write_report",
]


@dataclass(frozen=True)
class ThetaEstimate:
    """Estimated connectivity with plug-in sampling variance.

    ``probs`` is reported unclamped (the raw estimator is unbiased);
    ``clamped`` trims to [0, 1] for use as probabilities. Cells that
    cannot be estimated (empty community, or a singleton community on
    the diagonal) hold NaN and are flagged in ``missing``.
    """

    probs: np.ndarray
    variance: np.ndarray
    missing: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).copy()
        var = np.asarray(self.variance, dtype=float).copy()
        miss = np.asarray(self.missing, dtype=bool).copy()
        if probs.shape != var.shape or probs.shape != miss.shape:
            raise ValueError("probs, variance and missing must share a shape")
        for arr in (probs, var, miss):
            arr.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "variance", var)
        object.__setattr__(self, "missing", miss)

    @property
    def k(self) -> int:
        return self.probs.shape[0]

    @property
    def clamped(self) -> np.ndarray:
        out = np.clip(self.probs, 0.0, 1.0)
        out[self.missing] = np.nan
        return out


def theta_variance(probs: np.ndarray, cluster_sizes: np.ndarray) -> np.ndarray:
    """Sampling variance of the moment estimator at connectivity ``probs``.

    Off-diagonal cells see |G_k| |G_l| independent pair draws, diagonal
    cells C(|G_k|, 2); undefined cells (empty or singleton communities)
    come back NaN.
    """
    probs = np.asarray(probs, dtype=float)
    c = np.asarray(cluster_sizes, dtype=float)
    pairs = np.outer(c, c)
    np.fill_diagonal(pairs, c * (c - 1) / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        var = probs * (1.0 - probs) / pairs
    var[pairs <= 0] = np.nan
    return var


def estimate_theta_single(adjacency: Adjacency, labels, k: int) -> ThetaEstimate:
    """Moment estimator of the connectivity from one labelled graph.

    Off-diagonal cells are edge counts over possible pairs and are
    unbiased as-is. Diagonal cells get the correction that removes the
    bias from self-pairs, which needs at least two nodes in the
    community; singleton communities keep the raw cell but are flagged
    missing, empty communities lose their whole row and column.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != adjacency.n_nodes:
        raise ValueError("labels must cover every node")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must lie in 0..{k - 1}")

    c = np.bincount(labels, minlength=k).astype(float)
    m = np.zeros((k, k))
    if adjacency.n_edges:
        lu = labels[adjacency.edges[:, 0]]
        lv = labels[adjacency.edges[:, 1]]
        np.add.at(m, (lu, lv), 1.0)
        np.add.at(m, (lv, lu), 1.0)

    pairs = np.outer(c, c)  # ordered pairs; diagonal counts self-pairs too
    with np.errstate(divide="ignore", invalid="ignore"):
        s = m / pairs
    probs = s.copy()
    missing = np.zeros((k, k), dtype=bool)

    empty = c == 0
    missing[empty, :] = True
    missing[:, empty] = True

    diag = np.arange(k)
    correctable = c >= 2
    probs[diag[correctable], diag[correctable]] *= c[correctable] / (
        c[correctable] - 1.0
    )
    singleton = c == 1
    missing[diag[singleton], diag[singleton]] = True
    probs[missing] = np.nan

    variance = theta_variance(np.clip(probs, 0.0, 1.0), c)
    variance[missing] = np.nan
    return ThetaEstimate(probs=probs, variance=variance, missing=missing)


def estimate_theta_pooled(
    dataset: GraphDataset, membership: Membership, k: int | None = None
) -> ThetaEstimate:
    """Unweighted mean of per-graph estimates, cell by cell.

    A cell is averaged over the graphs where it is defined; cells
    defined nowhere stay missing.
    """
    if k is None:
        k = membership.k
    if len(dataset) != membership.n_graphs:
        raise ValueError("dataset and membership disagree on the graph count")
    singles = [
        estimate_theta_single(adj, labels, k)
        for adj, labels in zip(dataset, membership.labels_per_graph)
    ]
    probs = np.stack([est.probs for est in singles])
    var = np.stack([est.variance for est in singles])
    defined = ~np.stack([est.missing for est in singles])
    n_def = defined.sum(axis=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN cells
        pooled = np.nanmean(probs, axis=0)
        pooled_var = np.nansum(var, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        pooled_var = pooled_var / n_def.astype(float) ** 2
    missing = n_def == 0
    pooled[missing] = np.nan
    pooled_var[missing] = np.nan
    return ThetaEstimate(probs=pooled, variance=pooled_var, missing=missing)


def _coerce_probs(theta) -> np.ndarray:
    return np.asarray(getattr(theta, "probs", theta), dtype=float)


def sse(theta_hat, theta_true) -> float:
    """Variance-weighted squared error between connectivity matrices.

    Cells whose true probability sits on the boundary {0, 1} have zero
    Bernoulli variance and are excluded with a warning, as are cells
    the estimate does not define.
    """
    hat = _coerce_probs(theta_hat)
    true = _coerce_probs(theta_true)
    if hat.shape != true.shape:
        raise ValueError("connectivity matrices must share a shape")
    boundary = (true <= 0.0) | (true >= 1.0)
    undefined = np.isnan(hat)
    if boundary.any():
        warnings.warn(
            f"sse: excluded {int(boundary.sum())} cell(s) with true probability 0 or 1"
        )
    if (undefined & ~boundary).any():
        warnings.warn(
            f"sse: excluded {int((undefined & ~boundary).sum())} undefined cell(s)"
        )
    keep = ~(boundary | undefined)
    diff = hat[keep] - true[keep]
    scale = true[keep] * (1.0 - true[keep])
    return float(np.sum(diff * diff / scale))


# ---------------------------------------------------------------------------
# partition agreement


def _contingency(labels_a, labels_b) -> np.ndarray:
    a = np.asarray(labels_a, dtype=np.int64)
    b = np.asarray(labels_b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("label vectors must be 1-D and equally long")
    if a.size == 0:
        raise ValueError("label vectors must be non-empty")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka = ai.max() + 1
    kb = bi.max() + 1
    return np.bincount(ai * kb + bi, minlength=ka * kb).reshape(ka, kb).astype(float)


def nmi(labels_a, labels_b) -> float:
    """Mutual information in nats over the arithmetic mean of entropies.

    Two constant labelings are identical partitions, so their NMI is 1;
    a constant against a non-constant labeling scores 0.
    """
    cont = _contingency(labels_a, labels_b)
    n = cont.sum()
    pa = cont.sum(axis=1) / n
    pb = cont.sum(axis=0) / n
    ha = float(-np.sum(pa * np.log(pa, where=pa > 0, out=np.zeros_like(pa))))
    hb = float(-np.sum(pb * np.log(pb, where=pb > 0, out=np.zeros_like(pb))))
    if ha == 0.0 and hb == 0.0:
        return 1.0
    pij = cont / n
    outer = np.outer(pa, pb)
    mask = pij > 0
    mi = float(np.sum(pij[mask] * np.log(pij[mask] / outer[mask])))
    return float(min(max(mi / ((ha + hb) / 2.0), 0.0), 1.0))


def ari(labels_a, labels_b) -> float:
    """Adjusted Rand index via pair counting."""
    cont = _contingency(labels_a, labels_b)
    n = cont.sum()

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(cont).sum()
    sum_a = comb2(cont.sum(axis=1)).sum()
    sum_b = comb2(cont.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_a * sum_b / total if total > 0 else 0.0
    maximum = (sum_a + sum_b) / 2.0
    if maximum == expected:
        return 1.0  # both partitions degenerate in the same way
    return float((sum_ij - expected) / (maximum - expected))


def _confusion(labels_pred, labels_true, k: int) -> np.ndarray:
    # k-indexed counts, unlike _contingency which compacts label values
    pred = np.asarray(labels_pred, dtype=np.int64)
    true = np.asarray(labels_true, dtype=np.int64)
    if pred.shape != true.shape or pred.ndim != 1 or pred.size == 0:
        raise ValueError("label vectors must be 1-D, non-empty and equally long")
    if pred.min() < 0 or pred.max() >= k or true.min() < 0 or true.max() >= k:
        raise ValueError(f"labels must lie in 0..{k - 1}")
    return np.bincount(pred * k + true, minlength=k * k).reshape(k, k)


def best_label_matching(labels_pred, labels_true, k: int) -> np.ndarray:
    """Permutation sending each predicted label to its best true label.

    The matching maximises total agreement over all k! permutations
    (solved exactly by an assignment solver). Returns ``perm`` such that
    ``perm[labels_pred]`` is the relabelling closest to ``labels_true``.
    """
    cont = _confusion(labels_pred, labels_true, k)
    rows, cols = linear_sum_assignment(-cont)
    perm = np.empty(k, dtype=np.int64)
    perm[rows] = cols
    return perm


def mcr(labels_pred, labels_true, k: int) -> float:
    """Misclustering rate: fraction wrong under the best label matching.

    The optimal matching over all k! permutations is found with an
    assignment solver, which is exact for any k.
    """
    pred = np.asarray(labels_pred, dtype=np.int64)
    cont = _confusion(labels_pred, labels_true, k)
    perm = best_label_matching(labels_pred, labels_true, k)
    agree = cont[np.arange(k), perm].sum()
    # single division so the result is bit-identical to mismatches/n
    return float((pred.size - agree) / pred.size)


def overall_nmi(pred: Membership, true: Membership) -> float:
    """NMI of the stacked labels across all graphs."""
    if pred.sizes != true.sizes:
        raise ValueError("memberships must cover the same graphs")
    return nmi(pred.stacked(), true.stacked())


def individual_nmis(pred: Membership, true: Membership) -> list[float]:
    """Per-graph NMI, blind to cross-graph label alignment."""
    if pred.sizes != true.sizes:
        raise ValueError("memberships must cover the same graphs")
    return [
        nmi(p, t)
        for p, t in zip(pred.labels_per_graph, true.labels_per_graph)
    ]


def align_membership(pred: Membership, true: Membership) -> Membership:
    """Relabel ``pred`` onto ``true``'s community numbering.

    Fitted labels are only defined up to a permutation, so anything that
    compares label-indexed quantities against the truth — a connectivity
    estimate cell by cell, say — must quotient that permutation out
    first. The matching is the same one the misclustering rate uses,
    computed on the stacked labels so all graphs move together.
    """
    if pred.sizes != true.sizes:
        raise ValueError("memberships must cover the same graphs")
    k = max(pred.k, true.k)
    perm = best_label_matching(pred.stacked(), true.stacked(), k)
    return Membership(
        tuple(perm[labels] for labels in pred.labels_per_graph), k
    )


def assignment_entropy(
    occurrences: Mapping[Hashable, Sequence[int]],
) -> tuple[dict, dict]:
    """Shannon entropy (nats) of each key's empirical label distribution.

    ``occurrences`` maps a key (say, a recurring participant) to the
    labels it received across graphs. Returns per-key entropies plus a
    summary with the mean and distribution quantiles.
    """
    if not occurrences:
        raise ValueError("occurrences must be non-empty")
    entropies = {}
    for key, labs in occurrences.items():
        labs = np.asarray(labs, dtype=np.int64)
        if labs.size == 0:
            raise ValueError(f"key {key!r} has no observations")
        freq = np.bincount(labs)
        p = freq[freq > 0] / labs.size
        entropies[key] = float(-np.sum(p * np.log(p)))
    vals = np.array(list(entropies.values()))
    summary = {
        "n_keys": int(vals.size),
        "mean": float(vals.mean()),
        "min": float(vals.min()),
        "q25": float(np.percentile(vals, 25)),
        "median": float(np.percentile(vals, 50)),
        "q75": float(np.percentile(vals, 75)),
        "max": float(vals.max()),
    }
    return entropies, summary


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class EvalReport:
    """Agreement between a fitted and a reference membership."""

    overall_nmi: float
    individual_nmis: tuple[float, ...]
    ari: float
    mcr: float
    sse: float | None = None
    entropy_summary: dict | None = None

    def to_dict(self) -> dict:
        return {
            "overall_nmi": self.overall_nmi,
            "individual_nmis": list(self.individual_nmis),
            "ari": self.ari,
            "mcr": self.mcr,
            "sse": self.sse,
            "entropy_summary": self.entropy_summary,
        }


def evaluate_membership(
    pred: Membership,
    true: Membership,
    *,
    theta_hat=None,
    theta_true=None,
    entropy_keys: Mapping[Hashable, Sequence[int]] | None = None,
) -> EvalReport:
    """Score a fitted membership against the truth.

    SSE is included when both a connectivity estimate and the true
    connectivity are supplied; entropy when per-key label occurrences
    are supplied. SSE compares cells positionally, so ``theta_hat``
    should come from labels already matched to the truth's numbering
    (``align_membership`` does this).
    """
    k = max(pred.k, true.k)
    report_sse = None
    if theta_hat is not None and theta_true is not None:
        report_sse = sse(theta_hat, theta_true)
    entropy_summary = None
    if entropy_keys is not None:
        _, entropy_summary = assignment_entropy(entropy_keys)
    return EvalReport(
        overall_nmi=overall_nmi(pred, true),
        individual_nmis=tuple(individual_nmis(pred, true)),
        ari=ari(pred.stacked(), true.stacked()),
        mcr=mcr(pred.stacked(), true.stacked(), k),
        sse=report_sse,
        entropy_summary=entropy_summary,
    )


_REPORT_SCHEMA = "# jointsbm-report/1"


def write_report(report: EvalReport, out_dir) -> tuple[Path, Path]:
    """Serialise a report as JSON plus flat CSV rows.

    The CSV carries one row per graph for the individual metrics and
    one summary row; its first line is a schema-version comment.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jpath = out / "report.json"
    with open(jpath, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    cpath = out / "report.csv"
    with open(cpath, "w", encoding="utf-8", newline="") as fh:
        fh.write(_REPORT_SCHEMA + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "graph", "nmi", "ari", "mcr", "sse"])
        for g, v in enumerate(report.individual_nmis):
            writer.writerow(["graph", g, repr(v), "", "", ""])
        writer.writerow(
            [
                "overall",
                "",
                repr(report.overall_nmi),
                repr(report.ari),
                repr(report.mcr),
                "" if report.sse is None else repr(report.sse),
            ]
        )
    return jpath, cpath
