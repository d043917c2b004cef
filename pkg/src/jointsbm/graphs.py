"""Containers and file I/O for multi-graph community datasets.

A dataset is an ordered collection of undirected, binary, loop-free
graphs of varying size. Graphs share a set of k communities but not
their nodes: node i of one graph has nothing to do with node i of
another, and graphs never share edges.

On disk a dataset is a JSON manifest pointing at per-graph edge lists::

    {"k_hint": 6, "graphs": [{"nodes": 120, "edges": "graph_0000.edg"}, ...]}

Edge lists hold one ``u v`` pair per line, 0-based and whitespace
separated; the canonical form has u < v but either order is accepted.
Memberships travel as CSV with header ``graph,node,label``. All files
are UTF-8 with LF line endings.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "Adjacency",
    "GraphDataset",
    "Membership",
    "ClusterCounts",
    "counts",
    "random_membership",
    "load_dataset",
    "save_dataset",
    "load_membership",
    "save_membership",
]


@dataclass(frozen=True)
class Adjacency:
    """Undirected binary graph on ``n_nodes`` vertices, no self-loops.

    Edges are stored as a canonical ``(m, 2)`` integer array with
    ``u < v`` in every row, sorted lexicographically and de-duplicated.
    Degree-zero nodes are legal: they simply get zero rows in any
    spectral embedding downstream.
    """

    n_nodes: int
    edges: np.ndarray

    def __post_init__(self):
        n = int(self.n_nodes)
        if n < 1:
            raise ValueError("a graph needs at least one node")
        raw = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if raw.size:
            if raw.min() < 0 or raw.max() >= n:
                raise ValueError(f"edge endpoint outside 0..{n - 1}")
            if (raw[:, 0] == raw[:, 1]).any():
                raise ValueError("self-loops are not allowed")
            canon = np.unique(
                np.column_stack([raw.min(axis=1), raw.max(axis=1)]), axis=0
            )
        else:
            canon = np.zeros((0, 2), dtype=np.int64)
        canon.setflags(write=False)
        object.__setattr__(self, "n_nodes", n)
        object.__setattr__(self, "edges", canon)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n_nodes, self.n_nodes))
        if self.n_edges:
            u, v = self.edges[:, 0], self.edges[:, 1]
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a

    def to_sparse(self):
        """Symmetric CSR copy of the adjacency matrix."""
        from scipy import sparse

        m = self.n_edges
        u, v = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * m)
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        return sparse.csr_matrix(
            (data, (rows, cols)), shape=(self.n_nodes, self.n_nodes)
        )


@dataclass(frozen=True)
class GraphDataset:
    """Ordered, non-empty collection of graphs with no shared nodes."""

    graphs: tuple[Adjacency, ...]

    def __post_init__(self):
        gs = tuple(self.graphs)
        if not gs:
            raise ValueError("a dataset needs at least one graph")
        object.__setattr__(self, "graphs", gs)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(g.n_nodes for g in self.graphs)

    @property
    def total_nodes(self) -> int:
        return int(sum(self.sizes))

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self) -> Iterator[Adjacency]:
        return iter(self.graphs)

    def __getitem__(self, i: int) -> Adjacency:
        return self.graphs[i]


@dataclass(frozen=True)
class Membership:
    """Hard community assignment for every node of every graph.

    ``labels_per_graph[n][i]`` is the community of node i in graph n,
    an integer in ``0..k-1``.
    """

    labels_per_graph: tuple[np.ndarray, ...]
    k: int

    def __post_init__(self):
        k = int(self.k)
        if k < 1:
            raise ValueError("k must be at least 1")
        cleaned = []
        for labels in self.labels_per_graph:
            arr = np.asarray(labels, dtype=np.int64).copy()
            if arr.ndim != 1:
                raise ValueError("per-graph labels must be 1-D")
            if arr.size and (arr.min() < 0 or arr.max() >= k):
                raise ValueError(f"labels must lie in 0..{k - 1}")
            arr.setflags(write=False)
            cleaned.append(arr)
        if not cleaned:
            raise ValueError("membership needs at least one graph")
        object.__setattr__(self, "labels_per_graph", tuple(cleaned))
        object.__setattr__(self, "k", k)

    @property
    def n_graphs(self) -> int:
        return len(self.labels_per_graph)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.labels_per_graph)

    def stacked(self) -> np.ndarray:
        """All labels concatenated in dataset order."""
        return np.concatenate(self.labels_per_graph)


@dataclass(frozen=True)
class ClusterCounts:
    """Community sizes per graph and pooled over the dataset."""

    per_graph: np.ndarray  # (n_graphs, k)
    overall: np.ndarray  # (k,)

    def __post_init__(self):
        per = np.asarray(self.per_graph, dtype=np.int64)
        tot = np.asarray(self.overall, dtype=np.int64)
        per.setflags(write=False)
        tot.setflags(write=False)
        object.__setattr__(self, "per_graph", per)
        object.__setattr__(self, "overall", tot)


def counts(membership: Membership) -> ClusterCounts:
    """Tabulate community sizes; ``overall`` is the per-graph sum."""
    per = np.stack(
        [
            np.bincount(labels, minlength=membership.k)
            for labels in membership.labels_per_graph
        ]
    )
    return ClusterCounts(per_graph=per, overall=per.sum(axis=0))


def random_membership(dataset: GraphDataset, k: int, seed: int = 0) -> Membership:
    """Uniform iid labels for every node; the usual optimiser start."""
    if k < 2:
        raise ValueError("random membership needs k >= 2")
    rng = np.random.default_rng(seed)
    labels = tuple(rng.integers(0, k, size=g.n_nodes) for g in dataset)
    return Membership(labels_per_graph=labels, k=k)


# ---------------------------------------------------------------------------
# file formats


def _parse_edge_file(path: Path, n_nodes: int, duplicate_edges: str) -> list:
    pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    dropped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 2:
                raise ValueError(
                    f"{path}:{lineno}: expected two endpoints, got {line.rstrip()!r}"
                )
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: non-integer endpoint in {line.rstrip()!r}"
                ) from None
            if u == v:
                raise ValueError(f"{path}:{lineno}: self-loop at node {u}")
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise ValueError(
                    f"{path}:{lineno}: endpoint outside 0..{n_nodes - 1}"
                )
            key = (u, v) if u < v else (v, u)
            if key in seen:
                if duplicate_edges == "error":
                    raise ValueError(f"{path}:{lineno}: duplicate edge {key}")
                dropped += 1
                continue
            seen.add(key)
            pairs.append(key)
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} duplicate edge(s)")
    return pairs


def load_dataset(manifest_path, *, duplicate_edges: str = "warn") -> GraphDataset:
    """Read a dataset from its JSON manifest.

    ``duplicate_edges`` is "warn" (drop repeats with a warning) or
    "error".
    """
    if duplicate_edges not in ("warn", "error"):
        raise ValueError("duplicate_edges must be 'warn' or 'error'")
    path = Path(manifest_path)
    if path.is_dir():
        path = path / "manifest.json"
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    entries = spec.get("graphs")
    if not isinstance(entries, list) or not entries:
        raise ValueError(f"{path}: manifest must list at least one graph")
    graphs = []
    for entry in entries:
        n = int(entry["nodes"])
        edge_path = path.parent / entry["edges"]
        pairs = _parse_edge_file(edge_path, n, duplicate_edges)
        graphs.append(Adjacency(n_nodes=n, edges=pairs))
    return GraphDataset(graphs=tuple(graphs))


def manifest_k_hint(manifest_path) -> int | None:
    """Optional community count recorded alongside a dataset."""
    path = Path(manifest_path)
    if path.is_dir():
        path = path / "manifest.json"
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    hint = spec.get("k_hint")
    return None if hint is None else int(hint)


def save_dataset(dataset: GraphDataset, out_dir, *, k_hint: int | None = None) -> Path:
    """Write edge lists plus manifest into ``out_dir``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, g in enumerate(dataset):
        name = f"graph_{i:04d}.edg"
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            for u, v in g.edges:
                fh.write(f"{u} {v}\n")
        entries.append({"nodes": g.n_nodes, "edges": name})
    manifest: dict = {"graphs": entries}
    if k_hint is not None:
        manifest = {"k_hint": int(k_hint), "graphs": entries}
    mpath = out / "manifest.json"
    with open(mpath, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return mpath


def save_membership(membership: Membership, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["graph", "node", "label"])
        for g, labels in enumerate(membership.labels_per_graph):
            for i, lab in enumerate(labels):
                writer.writerow([g, i, int(lab)])
    return path


def load_membership(path, k: int | None = None) -> Membership:
    """Read a ``graph,node,label`` CSV; ``k`` defaults to max label + 1."""
    rows: dict[int, dict[int, int]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["graph", "node", "label"]:
            raise ValueError(f"{path}: expected header graph,node,label")
        for rec in reader:
            if not rec:
                continue
            if len(rec) != 3:
                raise ValueError(f"{path}: malformed row {rec!r}")
            g, i, lab = (int(x) for x in rec)
            rows.setdefault(g, {})
            if i in rows[g]:
                raise ValueError(f"{path}: node {i} of graph {g} assigned twice")
            rows[g][i] = lab
    if not rows:
        raise ValueError(f"{path}: no assignments found")
    n_graphs = max(rows) + 1
    if sorted(rows) != list(range(n_graphs)):
        raise ValueError(f"{path}: graph indices must be contiguous from 0")
    labels_per_graph = []
    for g in range(n_graphs):
        nodes = rows[g]
        if sorted(nodes) != list(range(len(nodes))):
            raise ValueError(f"{path}: node indices of graph {g} must be 0..n-1")
        labels_per_graph.append(np.array([nodes[i] for i in range(len(nodes))]))
    if k is None:
        k = int(max(arr.max() for arr in labels_per_graph)) + 1
    return Membership(labels_per_graph=tuple(labels_per_graph), k=k)
