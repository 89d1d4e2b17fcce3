"""Speaker-agnostic baseline detector: four segment-timing statistics fed
to a 51-tree random forest."""

from __future__ import annotations

from dataclasses import astuple, dataclass
from typing import Sequence

import numpy as np

from .errors import SingleClass, SingleClassTrainingSet, TooFewSegments
from .learn import Forest, ForestConfig, predict, train_forest
from .timeline import Timeline

BASELINE_TREES = 51


@dataclass(frozen=True)
class VadFeatureVector:
    mean_seg_len: float
    std_seg_len: float
    mean_gap: float
    std_gap: float

    def vector(self) -> list[float]:
        return list(astuple(self))


def compute_vad_features(t: Timeline) -> VadFeatureVector:
    """Mean and population std of segment lengths and inter-segment gaps.

    A gap is ``max(0, next.onset - prev.end)`` over consecutive segments in
    onset order, so overlapping pairs contribute zero.

    Raises:
        TooFewSegments: fewer than two segments.
    """
    if len(t.segments) < 2:
        raise TooFewSegments(f"{t.recording_id!r} has {len(t.segments)} segment(s); need 2")
    segs = sorted(t.segments, key=lambda s: s.sort_key())
    lengths = np.array([s.duration for s in segs])
    onsets = np.array([s.onset for s in segs])
    gaps = np.maximum(0.0, onsets[1:] - (onsets[:-1] + lengths[:-1]))
    return VadFeatureVector(
        float(lengths.mean()), float(lengths.std()), float(gaps.mean()), float(gaps.std())
    )


@dataclass(frozen=True)
class BaselineModel:
    forest: Forest


def train_baseline(
    features: Sequence[VadFeatureVector], labels: Sequence[bool], seed: int = 0
) -> BaselineModel:
    """Fit the baseline forest; ``labels`` are ``True`` for dyadic.

    Raises:
        SingleClassTrainingSet: only one class present.
    """
    labels = [bool(v) for v in labels]
    if len(set(labels)) < 2:
        raise SingleClassTrainingSet("baseline training needs dyadic and non-dyadic examples")
    cfg = ForestConfig(n_trees=BASELINE_TREES, seed=seed)
    try:
        forest = train_forest([f.vector() for f in features], labels, cfg)
    except SingleClass as exc:
        raise SingleClassTrainingSet(str(exc)) from None
    return BaselineModel(forest)


def predict_baseline(m: BaselineModel, f: VadFeatureVector) -> tuple[bool, float]:
    """Return ``(is_dyadic, share of trees voting dyadic)``."""
    label, share = predict(m.forest, f.vector())
    return bool(label), share
