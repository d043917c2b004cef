"""Leading-magnitude eigendecompositions and scaled spectral embeddings.

Handles:
 - top-k eigenpairs of symmetric matrices, dense or sparse, ordered by
   absolute eigenvalue;
 - the scaled embedding rows each graph contributes to the shared
   clustering objective;
 - exact low-rank decompositions of block-constant population matrices,
   used as oracles when the community structure is known.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .graphs import Adjacency, ClusterCounts, Membership, counts

__all__ = [
    "DENSE_EIGEN_MAX_N",
    "SpectralPair",
    "QStar",
    "PopulationDecomposition",
    "top_k_eigen",
    "adjacency_eigen",
    "q_star",
    "population_quantities",
]

# Dense solves are exact and fast enough up to this order; beyond it we
# switch to restarted Lanczos iterations on the sparse operator.
DENSE_EIGEN_MAX_N = 2048

_SYMMETRY_TOL = 1e-10
_ITERATIVE_TOL = 1e-8
_RANK_TOL = 1e-10


def _magnitude_order(values: np.ndarray) -> np.ndarray:
    """Sort order: |value| descending, then signed value, then position."""
    idx = np.arange(len(values))
    # lexsort uses the last key as primary
    return np.lexsort((idx, -values, -np.abs(values)))


def _fix_column_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-|entry| coordinate is positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        lead = np.argmax(np.abs(col))
        if col[lead] < 0:
            out[:, j] = -col
    return out


@dataclass(frozen=True)
class SpectralPair:
    """Top-k eigenvectors (orthonormal columns) and eigenvalues.

    Values are ordered by absolute value, descending; each eigenvector
    has its largest-magnitude coordinate positive so decompositions are
    reproducible across runs.
    """

    vectors: np.ndarray  # (n, k)
    values: np.ndarray  # (k,)

    def __post_init__(self):
        vec = np.asarray(self.vectors, dtype=float)
        val = np.asarray(self.values, dtype=float)
        if vec.ndim != 2 or val.ndim != 1 or vec.shape[1] != val.shape[0]:
            raise ValueError("vectors must be (n, k) with k values")
        gram = vec.T @ vec
        if not np.allclose(gram, np.eye(vec.shape[1]), atol=1e-8):
            raise ValueError("eigenvector columns must be orthonormal")
        mags = np.abs(val)
        if np.any(mags[:-1] < mags[1:] - 1e-12):
            raise ValueError("values must be ordered by |value| descending")
        vec = vec.copy()
        val = val.copy()
        vec.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "values", val)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def k(self) -> int:
        return self.vectors.shape[1]


def top_k_eigen(matrix, k: int) -> SpectralPair:
    """k eigenpairs of a symmetric real matrix with largest |eigenvalue|.

    Accepts a dense ndarray or a scipy sparse matrix. Ties in magnitude
    are broken by signed value (descending), then by position. Dense
    inputs get an exact solve; sparse inputs use implicitly restarted
    Lanczos with tolerance 1e-8 and at most 10 n matrix products.
    """
    is_sparse = sparse.issparse(matrix)
    n = matrix.shape[0]
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}")
    if is_sparse:
        asym = abs(matrix - matrix.T)
        gap = asym.max() if asym.nnz else 0.0
    else:
        matrix = np.asarray(matrix, dtype=float)
        gap = float(np.abs(matrix - matrix.T).max()) if n > 1 else 0.0
    if gap > _SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric (max asymmetry {gap:.3e})")

    if is_sparse and k < n:
        vals, vecs = eigsh(
            matrix.asfptype(), k=k, which="LM", tol=_ITERATIVE_TOL, maxiter=10 * n
        )
    else:
        dense = matrix.toarray() if is_sparse else matrix
        vals, vecs = np.linalg.eigh(dense)
    order = _magnitude_order(vals)[:k]
    return SpectralPair(vectors=_fix_column_signs(vecs[:, order]), values=vals[order])


def adjacency_eigen(adj: Adjacency, k: int) -> SpectralPair:
    """Top-k eigenpairs of a graph, densifying only small graphs."""
    if not 1 <= k <= adj.n_nodes:
        raise ValueError(f"k must lie in 1..{adj.n_nodes}")
    if adj.n_nodes <= DENSE_EIGEN_MAX_N or k >= adj.n_nodes:
        return top_k_eigen(adj.to_dense(), k)
    return top_k_eigen(adj.to_sparse(), k)


@dataclass(frozen=True)
class QStar:
    """One graph's rows in the shared clustering space.

    Rows are |vectors . diag(values)| scaled by sqrt(n_total/n_local);
    the absolute value removes per-graph sign indeterminacy, the scale
    puts graphs of different sizes on a common footing.
    """

    rows: np.ndarray  # (n_local, k), non-negative
    scale: float

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float).copy()
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "scale", float(self.scale))


def q_star(pair: SpectralPair, n_local: int, n_total: int) -> QStar:
    """Scaled non-negative embedding rows for one graph."""
    if n_local < 1:
        raise ValueError("n_local must be positive")
    if pair.n != n_local:
        raise ValueError("pair has a different number of rows than n_local")
    if n_total < n_local:
        raise ValueError("n_total must be at least n_local")
    scale = float(np.sqrt(n_total / n_local))
    rows = np.abs(pair.vectors * pair.values[None, :]) * scale
    return QStar(rows=rows, scale=scale)


@dataclass(frozen=True)
class PopulationDecomposition:
    """Exact spectral quantities of a known block-constant model.

    ``u, d`` decompose the stacked edge-probability matrix of all graphs
    (cross-graph blocks included); ``z, d_tilde`` decompose the small
    count-weighted connectivity matrix; ``z_n, d_n`` do the same per
    graph. ``counts`` records the community sizes everything was built
    from.
    """

    p_blocks: tuple[np.ndarray, ...]
    u: np.ndarray
    d: np.ndarray
    z: np.ndarray
    d_tilde: np.ndarray
    z_n: tuple[np.ndarray, ...]
    d_n: tuple[np.ndarray, ...]
    counts: ClusterCounts


def _theta_probs(theta) -> np.ndarray:
    return np.asarray(getattr(theta, "probs", theta), dtype=float)


def population_quantities(membership: Membership, theta) -> PopulationDecomposition:
    """Exact decomposition of the population matrices for known labels.

    Requires every community to be present in every graph (the
    per-graph quantities divide by local counts) and the weighted
    connectivity matrix to be full rank.
    """
    probs = _theta_probs(theta)
    k = membership.k
    if probs.shape != (k, k):
        raise ValueError("theta must be k x k")
    cc = counts(membership)
    if (cc.overall == 0).any():
        raise ValueError("every community must be present overall")
    if (cc.per_graph == 0).any():
        raise ValueError("every community must be present in every graph")

    root_total = np.sqrt(cc.overall.astype(float))
    m_global = root_total[:, None] * probs * root_total[None, :]
    ew = np.linalg.eigvalsh(m_global)
    if np.abs(ew).min() <= _RANK_TOL:
        raise ValueError("count-weighted connectivity is rank deficient")
    z_pair = top_k_eigen(m_global, k)

    p_blocks = []
    z_n = []
    d_n = []
    for labels, local in zip(membership.labels_per_graph, cc.per_graph):
        p_blocks.append(probs[np.ix_(labels, labels)])
        root_local = np.sqrt(local.astype(float))
        m_local = root_local[:, None] * probs * root_local[None, :]
        local_pair = top_k_eigen(m_local, k)
        z_n.append(local_pair.vectors)
        d_n.append(local_pair.values)

    stacked = membership.stacked()
    p_full = probs[np.ix_(stacked, stacked)]
    full_pair = top_k_eigen(p_full, k)

    return PopulationDecomposition(
        p_blocks=tuple(p_blocks),
        u=full_pair.vectors,
        d=full_pair.values,
        z=z_pair.vectors,
        d_tilde=z_pair.values,
        z_n=tuple(z_n),
        d_n=tuple(d_n),
        counts=cc,
    )
