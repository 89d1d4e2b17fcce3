"""Detection and removal of spurious speaker clusters.

A cluster is spurious when it does not stand for a distinct real speaker:
background noise, or one speaker split in two. Each cluster is described
by five features (:class:`ClusterFeatures`) and classified either by a
trained forest or by a speech-share heuristic. Flagged clusters are
deleted and their segments handed to the nearest surviving centroid.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass
from typing import Sequence

import numpy as np

from .clustering import (
    ClusterAssignment,
    MergeTree,
    assignment_from_labels,
    cosine_distance_matrix,
    cut_tree,
)
from .errors import InconsistentInputs, SingleClass
from .formats import EmbeddingTable
from .learn import Forest, ForestConfig, predict, train_forest
from .timeline import Timeline

FEATURE_NAMES = (
    "speech_share",
    "n_segments",
    "mean_intra_distance",
    "min_centroid_distance",
    "mean_segment_duration",
)
# Reported as min_centroid_distance when there is no other cluster.
NO_NEIGHBOUR_DISTANCE = 2.0


@dataclass(frozen=True)
class ClusterFeatures:
    speech_share: float
    n_segments: int
    mean_intra_distance: float
    min_centroid_distance: float
    mean_segment_duration: float

    def vector(self) -> list[float]:
        return [float(v) for v in astuple(self)]


@dataclass(frozen=True)
class HeuristicFilter:
    """Flag clusters holding less than ``min_share`` of the speech time."""

    min_share: float = 0.05


def _durations(c: ClusterAssignment, e: EmbeddingTable, t: Timeline) -> dict[str, float]:
    dur: dict[str, float] = {}
    for seg in t.segments:
        if seg.segment_id in e:
            dur[seg.segment_id] = dur.get(seg.segment_id, 0.0) + seg.duration
    if set(dur) != set(c.assignment):
        missing = set(dur) ^ set(c.assignment)
        raise InconsistentInputs(
            f"assignment and embedded timeline segments differ on {len(missing)} ids"
        )
    return dur


def compute_cluster_features(
    c: ClusterAssignment, e: EmbeddingTable, t: Timeline
) -> list[ClusterFeatures]:
    """One feature row per cluster, in cluster-index order.

    Raises:
        InconsistentInputs: the assignment does not cover exactly the
            timeline segments that have embeddings.
    """
    dur = _durations(c, e, t)
    total = sum(dur.values())
    clusters = c.clusters()
    if c.n_clusters > 1:
        cd = cosine_distance_matrix(c.centroids)
        np.fill_diagonal(cd, np.inf)
        nearest = cd.min(axis=1)
    else:
        nearest = np.full(c.n_clusters, NO_NEIGHBOUR_DISTANCE)

    out = []
    for k, ids in enumerate(clusters):
        secs = [dur[i] for i in ids]
        if len(ids) > 1:
            D = cosine_distance_matrix(e.matrix(ids))
            m = len(ids)
            intra = float(D.sum() / (m * (m - 1)))
        else:
            intra = 0.0
        out.append(
            ClusterFeatures(
                speech_share=sum(secs) / total if total > 0 else 1.0 / c.n_clusters,
                n_segments=len(ids),
                mean_intra_distance=intra,
                min_centroid_distance=float(min(nearest[k], NO_NEIGHBOUR_DISTANCE)),
                mean_segment_duration=float(np.mean(secs)) if secs else 0.0,
            )
        )
    return out


def flag_spurious(feats: Sequence[ClusterFeatures], model) -> list[bool]:
    if model is None:
        return [False] * len(feats)
    if isinstance(model, HeuristicFilter):
        return [f.speech_share < model.min_share for f in feats]
    if isinstance(model, Forest):
        return [bool(predict(model, f.vector())[0]) for f in feats]
    raise TypeError(f"unsupported spurious model {type(model).__name__}")


def filter_spurious(
    c: ClusterAssignment,
    feats: Sequence[ClusterFeatures],
    model,
    e: EmbeddingTable,
) -> ClusterAssignment:
    """Delete flagged clusters and reassign their segments.

    Each segment of a deleted cluster moves to the surviving centroid with
    the smallest cosine distance to its own embedding. If every cluster is
    flagged, the one with the largest speech share survives. Surviving
    clusters keep their relative order and centroids are recomputed.

    Args:
        c: clustering to filter.
        feats: features aligned with ``c``'s cluster indices.
        model: ``None`` (keep all), a :class:`HeuristicFilter`, or a forest
            trained by :func:`train_spurious_model`.
        e: embeddings of the clustered segments.
    """
    if len(feats) != c.n_clusters:
        raise InconsistentInputs(f"{len(feats)} feature rows for {c.n_clusters} clusters")
    flags = flag_spurious(feats, model)
    if not any(flags):
        return c
    keep = [k for k, f in enumerate(flags) if not f]
    if not keep:
        shares = [f.speech_share for f in feats]
        keep = [int(np.argmax(shares))]
    remap = {old: new for new, old in enumerate(keep)}
    kept_centroids = c.centroids[keep]
    ids = list(c.assignment)
    labels = []
    for sid in ids:
        old = c.assignment[sid]
        if old in remap:
            labels.append(remap[old])
        else:
            u = e[sid] / np.linalg.norm(e[sid])
            labels.append(int(np.argmax(kept_centroids @ u)))
    return assignment_from_labels(e, ids, labels)


def apply_filter(
    c: ClusterAssignment, e: EmbeddingTable, t: Timeline, model
) -> ClusterAssignment:
    if model is None or c.n_clusters == 0:
        return c
    return filter_spurious(c, compute_cluster_features(c, e, t), model, e)


def count_speakers(
    tree: MergeTree, e: EmbeddingTable, t: Timeline, threshold: float, model
) -> int:
    return apply_filter(cut_tree(tree, e, threshold), e, t, model).n_clusters


def label_clusters(c: ClusterAssignment, t: Timeline) -> list[bool]:
    """Reference spurious/genuine labels against annotated speakers.

    A cluster's speaker is the annotated speaker with the most speech time
    among its segments (unlabeled segments count as "no speaker"; ties go to
    the smaller label). The cluster is spurious when that is "no speaker",
    or when another cluster has more speech time from the same speaker
    (ties: the lower cluster index keeps the speaker).
    """
    dur_by_id: dict[str, tuple[float, str | None]] = {}
    for seg in t.segments:
        if seg.segment_id in c.assignment:
            prev = dur_by_id.get(seg.segment_id, (0.0, seg.speaker))[0]
            dur_by_id[seg.segment_id] = (prev + seg.duration, seg.speaker)

    owner: list[tuple[str | None, float]] = []
    for ids in c.clusters():
        overlap: dict[str | None, float] = {}
        for sid in ids:
            secs, spk = dur_by_id.get(sid, (0.0, None))
            overlap[spk] = overlap.get(spk, 0.0) + secs
        # most seconds first; on ties a real speaker beats None, then by name
        best = min(overlap.items(), key=lambda kv: (-kv[1], kv[0] is None, kv[0] or ""))
        owner.append(best)

    flags = []
    for k, (spk, secs) in enumerate(owner):
        if spk is None:
            flags.append(True)
            continue
        beaten = any(
            other_spk == spk and (other_secs > secs or (other_secs == secs and j < k))
            for j, (other_spk, other_secs) in enumerate(owner)
            if j != k
        )
        flags.append(beaten)
    return flags


def spurious_training_rows(
    corpus: Sequence[tuple[Timeline, EmbeddingTable, ClusterAssignment]],
) -> tuple[list[list[float]], list[bool]]:
    X: list[list[float]] = []
    y: list[bool] = []
    for t, e, c in corpus:
        X.extend(f.vector() for f in compute_cluster_features(c, e, t))
        y.extend(label_clusters(c, t))
    return X, y


def train_spurious_model(
    corpus: Sequence[tuple[Timeline, EmbeddingTable, ClusterAssignment]],
    cfg: ForestConfig = ForestConfig(),
) -> Forest:
    """Fit the spurious-cluster forest (positive class ``True`` = spurious).

    Args:
        corpus: annotated timelines with their embeddings and a clustering
            of those embeddings.

    Raises:
        SingleClass: every cluster is genuine (or every one spurious).
    """
    X, y = spurious_training_rows(corpus)
    if len(set(y)) < 2:
        raise SingleClass("spurious labels are all " + ("spurious" if y and y[0] else "genuine"))
    return train_forest(X, y, cfg)

