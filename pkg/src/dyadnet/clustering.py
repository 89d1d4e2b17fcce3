"""Average-linkage agglomerative clustering of segment embeddings under
cosine distance, and selection of the merge-stop threshold."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyGrid, EmptyTable, SingleClassDev, ZeroVector
from .formats import EmbeddingTable

MAX_COSINE_DISTANCE = 2.0


def default_grid() -> list[float]:
    """0.05-spaced thresholds from 0.1 to 1.5 inclusive."""
    return [round(0.1 + 0.05 * k, 10) for k in range(29)]


def cosine_distance(u, v) -> float:
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise DimensionMismatch(f"vectors of length {u.shape[0]} and {v.shape[0]}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroVector("cosine distance is undefined for a zero vector")
    d = 1.0 - float(u @ v) / (nu * nv)
    return min(MAX_COSINE_DISTANCE, max(0.0, d))


def normalize_rows(M: np.ndarray) -> np.ndarray:
    return M / np.linalg.norm(M, axis=1, keepdims=True)


def cosine_distance_matrix(M: np.ndarray) -> np.ndarray:
    U = normalize_rows(np.asarray(M, dtype=float))
    D = 1.0 - U @ U.T
    np.clip(D, 0.0, MAX_COSINE_DISTANCE, out=D)
    np.fill_diagonal(D, 0.0)
    return D


@dataclass(frozen=True)
class ClusterAssignment:
    assignment: dict[str, int]
    n_clusters: int
    centroids: np.ndarray  # (n_clusters, dim), unit rows

    def members(self, k: int) -> list[str]:
        return [sid for sid, c in self.assignment.items() if c == k]

    def clusters(self) -> list[list[str]]:
        out: list[list[str]] = [[] for _ in range(self.n_clusters)]
        for sid, c in self.assignment.items():
            out[c].append(sid)
        return out


@dataclass(frozen=True)
class MergeTree:
    """Full agglomeration history of one table.

    ``merges[k] = (a, b, height)`` merges the clusters whose current index
    (smallest member position) is ``a`` and ``b``; ``a < b``.
    """

    ids: tuple[str, ...]
    merges: tuple[tuple[int, int, float], ...]

    def labels_at(self, threshold: float) -> np.ndarray:
        """Dense cluster labels after performing every merge up to the first
        whose height exceeds ``threshold``.

        Labels are numbered in order of first appearance along ``ids``.
        """
        n = len(self.ids)
        parent = np.arange(n)
        for a, b, h in self.merges:
            if h > threshold:
                break
            parent[parent == b] = a
        _, first, inverse = np.unique(parent, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(len(first))
        return rank[inverse]


def linkage_tree(table: EmbeddingTable, ids: Sequence[str] | None = None) -> MergeTree:
    """Run average-linkage agglomeration to a single cluster.

    At each step the closest pair of clusters is merged; among equal
    distances the lexicographically smallest ``(i, j)`` pair wins, where a
    cluster's index is the position of its first member. Inter-cluster
    distances are updated with the Lance-Williams average-linkage rule.
    """
    ids = tuple(table.ids if ids is None else ids)
    if not ids:
        raise EmptyTable("no embeddings to cluster")
    n = len(ids)
    D = cosine_distance_matrix(table.matrix(ids))
    np.fill_diagonal(D, np.inf)
    size = np.ones(n)
    merges = []
    for _ in range(n - 1):
        flat = int(np.argmin(D))  # row-major first hit == smallest (i, j)
        i, j = divmod(flat, n)
        h = float(D[i, j])
        ni, nj = size[i], size[j]
        row = (ni * D[i] + nj * D[j]) / (ni + nj)
        D[i, :] = row
        D[:, i] = row
        D[i, i] = np.inf
        D[j, :] = np.inf
        D[:, j] = np.inf
        size[i] += nj
        merges.append((i, j, h))
    return MergeTree(ids, tuple(merges))


def assignment_from_labels(
    table: EmbeddingTable, ids: Sequence[str], labels: Sequence[int]
) -> ClusterAssignment:
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1 if len(labels) else 0
    U = normalize_rows(table.matrix(ids)) if len(ids) else np.zeros((0, table.dim))
    centroids = np.zeros((k, table.dim))
    for c in range(k):
        m = U[labels == c].mean(axis=0)
        norm = np.linalg.norm(m)
        centroids[c] = m / norm if norm > 0 else U[labels == c][0]
    return ClusterAssignment(
        {sid: int(c) for sid, c in zip(ids, labels)}, k, centroids
    )


def cut_tree(tree: MergeTree, table: EmbeddingTable, threshold: float) -> ClusterAssignment:
    return assignment_from_labels(table, tree.ids, tree.labels_at(threshold))


def cluster_segments(
    e: EmbeddingTable, threshold: float, ids: Sequence[str] | None = None
) -> ClusterAssignment:
    """Cluster embeddings, stopping once the closest pair of clusters is
    farther apart than ``threshold`` (average cosine distance).

    Args:
        e: embedding table.
        threshold: merge-stop distance, > 0.
        ids: optional subset/order of segment ids; defaults to table order.

    Raises:
        EmptyTable: nothing to cluster.
    """
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    return cut_tree(linkage_tree(e, ids), e, threshold)


@dataclass(frozen=True)
class ThresholdTuneReport:
    grid: list[float]
    accuracy_per_threshold: list[float]
    best_threshold: float

    @property
    def best_accuracy(self) -> float:
        return self.accuracy_per_threshold[self.grid.index(self.best_threshold)]


def best_of_grid(grid: Sequence[float], accuracy: Sequence[float]) -> float:
    """Threshold with maximum accuracy; ties go to the smallest threshold."""
    top = max(accuracy)
    return min(t for t, a in zip(grid, accuracy) if a == top)


def tune_threshold(
    dev: Sequence[tuple],
    grid: Sequence[float] | None = None,
    filter: Hashable | Callable | None = None,
) -> ThresholdTuneReport:
    """Pick the clustering threshold that maximises dyadic-detection
    accuracy on a development set.

    Args:
        dev: ``(table, timeline, is_dyadic)`` triples. The timeline supplies
            segment durations to the spurious-cluster filter.
        grid: candidate thresholds; defaults to :func:`default_grid`.
        filter: spurious-cluster filter, as accepted by
            :func:`dyadnet.spurious.apply_filter`. ``None`` disables it.

    Raises:
        EmptyGrid: ``grid`` is empty.
        SingleClassDev: the dev labels contain one class only.
    """
    from .spurious import count_speakers

    grid = list(default_grid() if grid is None else grid)
    if not grid:
        raise EmptyGrid("threshold grid is empty")
    labels = [bool(item[2]) for item in dev]
    if len(set(labels)) < 2:
        raise SingleClassDev("development set must contain dyadic and non-dyadic recordings")

    hits = np.zeros(len(grid))
    for table, timeline, label in dev:
        ids = [s.segment_id for s in timeline.segments if s.segment_id in table]
        tree = linkage_tree(table, ids) if ids else None
        for g, thr in enumerate(grid):
            n = 0 if tree is None else count_speakers(tree, table, timeline, thr, filter)
            hits[g] += (n == 2) == bool(label)
    acc = [float(h / len(dev)) for h in hits]
    return ThresholdTuneReport(grid, acc, best_of_grid(grid, acc))
