"""Bagged CART classification forest.

Trees use Gini impurity, midpoint thresholds between consecutive distinct
feature values, and ``floor(sqrt(n_features))`` candidate features per
split. Impurity ties go to the lowest feature index, then the lowest
threshold.

Randomness: ``SeedSequence(seed).spawn(n_trees)`` gives one independent
PCG64 stream per tree, and tree ``i`` draws its bootstrap sample and its
feature subsets only from stream ``i``. Training order or thread count
therefore cannot change the result.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Hashable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    RaggedFeatures,
    SingleClass,
    TooFewSamples,
)

# Impurity differences below this are ties.
_IMPURITY_TIE = 1e-12


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 51
    max_depth: int | None = None
    min_leaf: int = 1
    features_per_split: str | int = "sqrt"
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive or None")
        if isinstance(self.features_per_split, str) and self.features_per_split != "sqrt":
            raise ValueError("features_per_split must be 'sqrt' or an integer")

    def n_candidates(self, n_features: int) -> int:
        if self.features_per_split == "sqrt":
            return max(1, int(math.isqrt(n_features)))
        return max(1, min(n_features, int(self.features_per_split)))


@dataclass(frozen=True)
class Tree:
    """Array-encoded binary tree. ``feature[k] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) training samples reaching each node

    def leaf_index(self, x: np.ndarray) -> int:
        k = 0
        while self.feature[k] >= 0:
            k = self.left[k] if x[self.feature[k]] <= self.threshold[k] else self.right[k]
        return k

    def predict_index(self, x: np.ndarray) -> int:
        return int(np.argmax(self.counts[self.leaf_index(x)]))

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]
    config: ForestConfig
    n_features: int
    classes: tuple[Hashable, ...]

    @property
    def positive_class(self) -> Hashable:
        """The class whose vote share :func:`predict` reports (the last one)."""
        return self.classes[-1]


def _as_matrix(X) -> np.ndarray:
    rows = [np.asarray(r, dtype=float).ravel() for r in X]
    if not rows:
        raise EmptyTrainingSet("no training samples")
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise RaggedFeatures(f"feature vectors have differing lengths {sorted(width)}")
    return np.vstack(rows)


def _best_split(
    Xn: np.ndarray, yn: np.ndarray, wn: np.ndarray, n_classes: int, features, min_leaf: int
):
    """Search ``features`` (in the given order) for the lowest-impurity split.

    Returns ``(impurity, feature, threshold)`` or ``None`` when no feature
    admits a split leaving ``min_leaf`` samples on both sides.
    """
    total_w = wn.sum()
    onehot = np.zeros((len(yn), n_classes))
    onehot[np.arange(len(yn)), yn] = wn
    best = None
    for f in sorted(features):
        order = np.argsort(Xn[:, f], kind="stable")
        xs = Xn[order, f]
        distinct = xs[1:] > xs[:-1]
        if not distinct.any():
            continue
        cum = np.cumsum(onehot[order], axis=0)[:-1]
        left_w = cum.sum(axis=1)
        right_w = total_w - left_w
        ok = distinct & (left_w >= min_leaf) & (right_w >= min_leaf)
        if not ok.any():
            continue
        right = cum[-1] + onehot[order[-1]] - cum
        gini_l = left_w - (cum**2).sum(axis=1) / left_w
        with np.errstate(divide="ignore", invalid="ignore"):
            gini_r = right_w - (right**2).sum(axis=1) / right_w
        imp = (gini_l + gini_r) / total_w
        imp = np.where(ok, imp, np.inf)
        pos = int(np.argmin(imp))  # first minimum -> lowest threshold
        if best is None or imp[pos] < best[0] - _IMPURITY_TIE:
            best = (float(imp[pos]), f, float((xs[pos] + xs[pos + 1]) / 2.0))
    return best


def _grow_tree(
    X: np.ndarray, y: np.ndarray, n_classes: int, cfg: ForestConfig, rng: np.random.Generator
) -> Tree:
    n, n_features = X.shape
    draws = rng.integers(0, n, size=n)
    weights = np.bincount(draws, minlength=n).astype(float)
    m = cfg.n_candidates(n_features)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[np.ndarray] = []

    def new_node(c):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(c)
        return len(feature) - 1

    root_idx = np.flatnonzero(weights)
    stack = [(root_idx, 0, new_node(np.bincount(y[root_idx], weights[root_idx], n_classes)))]
    while stack:
        idx, depth, node = stack.pop()
        c = counts[node]
        if (c > 0).sum() <= 1:
            continue
        if cfg.max_depth is not None and depth >= cfg.max_depth:
            continue
        if c.sum() < 2 * cfg.min_leaf:
            continue
        # Draw a full permutation so that, like common CART implementations,
        # further features are examined when the first m are all constant.
        perm = rng.permutation(n_features)
        Xn, yn, wn = X[idx], y[idx], weights[idx]
        found = _best_split(Xn, yn, wn, n_classes, perm[:m], cfg.min_leaf)
        for f in perm[m:]:
            if found is not None:
                break
            found = _best_split(Xn, yn, wn, n_classes, [f], cfg.min_leaf)
        if found is None:
            continue
        _, f, thr = found
        go_left = Xn[:, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        lnode = new_node(np.bincount(y[li], weights[li], n_classes))
        rnode = new_node(np.bincount(y[ri], weights[ri], n_classes))
        feature[node], threshold[node] = int(f), thr
        left[node], right[node] = lnode, rnode
        stack.append((ri, depth + 1, rnode))
        stack.append((li, depth + 1, lnode))

    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=float).reshape(len(feature), n_classes),
    )


def train_forest(X, y: Sequence[Hashable], cfg: ForestConfig = ForestConfig(), n_jobs: int = 1) -> Forest:
    """Fit a forest on feature rows ``X`` and labels ``y``.

    Raises:
        EmptyTrainingSet: fewer than 2 samples.
        RaggedFeatures: rows differ in length.
        SingleClass: only one distinct label.
    """
    Xm = _as_matrix(X)
    y = list(y)
    if len(y) != Xm.shape[0]:
        raise ValueError(f"{Xm.shape[0]} feature rows but {len(y)} labels")
    if len(y) < 2:
        raise EmptyTrainingSet("need at least 2 samples")
    classes = tuple(sorted(set(y), key=lambda c: (str(type(c)), c)))
    if len(classes) < 2:
        raise SingleClass(f"all training labels are {classes[0]!r}")
    lookup = {c: i for i, c in enumerate(classes)}
    yi = np.array([lookup[v] for v in y], dtype=np.int64)

    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)

    def grow(ss):
        return _grow_tree(Xm, yi, len(classes), cfg, np.random.Generator(np.random.PCG64(ss)))

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            trees = tuple(pool.map(grow, streams))
    else:
        trees = tuple(grow(ss) for ss in streams)
    return Forest(trees, cfg, Xm.shape[1], classes)


def predict(f: Forest, x) -> tuple[Hashable, float]:
    """Majority vote of all trees.

    Returns the winning label and the share of trees voting for
    ``f.positive_class``. Equal vote counts go to the earlier class.

    Raises:
        DimensionMismatch: ``len(x) != f.n_features``.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != f.n_features:
        raise DimensionMismatch(f"expected {f.n_features} features, got {x.shape[0]}")
    votes = np.zeros(len(f.classes), dtype=np.int64)
    for tree in f.trees:
        votes[tree.predict_index(x)] += 1
    return f.classes[int(np.argmax(votes))], float(votes[-1] / len(f.trees))


def predict_many(f: Forest, X) -> list[Hashable]:
    return [predict(f, x)[0] for x in X]


def stratified_folds(y: Sequence[Hashable], k_folds: int, seed: int) -> np.ndarray:
    """Fold index per sample; each class is shuffled and dealt round-robin."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xF01D])))
    folds = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in sorted(set(y), key=lambda c: (str(type(c)), c)):
        members = np.array([i for i, v in enumerate(y) if v == c])
        members = members[rng.permutation(len(members))]
        folds[members] = (np.arange(len(members)) + offset) % k_folds
        offset += len(members)
    return folds


def cross_validate(X, y: Sequence[Hashable], cfg: ForestConfig = ForestConfig(), k_folds: int = 5) -> float:
    """Mean held-out accuracy over stratified ``k_folds`` folds.

    Raises:
        TooFewSamples: ``k_folds < 2`` or fewer samples than folds.
    """
    y = list(y)
    if k_folds < 2 or len(y) < k_folds:
        raise TooFewSamples(f"{len(y)} samples cannot fill {k_folds} folds")
    Xm = _as_matrix(X)
    folds = stratified_folds(y, k_folds, cfg.seed)
    accs = []
    for k in range(k_folds):
        test = folds == k
        if not test.any():
            continue
        train_idx = np.flatnonzero(~test)
        model = train_forest(Xm[train_idx], [y[i] for i in train_idx], cfg)
        hits = [predict(model, Xm[i])[0] == y[i] for i in np.flatnonzero(test)]
        accs.append(float(np.mean(hits)))
    return float(np.mean(accs))


# --------------------------------------------------------------------------
# persistence


def forest_to_dict(f: Forest) -> dict[str, Any]:
    return {
        "config": asdict(f.config),
        "n_features": f.n_features,
        "classes": list(f.classes),
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "counts": t.counts.tolist(),
            }
            for t in f.trees
        ],
    }


def forest_from_dict(doc: dict[str, Any]) -> Forest:
    cfg = ForestConfig(**doc["config"])
    n_classes = len(doc["classes"])
    trees = tuple(
        Tree(
            np.array(t["feature"], dtype=np.int64),
            np.array(t["threshold"], dtype=float),
            np.array(t["left"], dtype=np.int64),
            np.array(t["right"], dtype=np.int64),
            np.array(t["counts"], dtype=float).reshape(-1, n_classes),
        )
        for t in doc["trees"]
    )
    return Forest(trees, cfg, int(doc["n_features"]), tuple(doc["classes"]))


def dumps_forest(f: Forest) -> str:
    return json.dumps(forest_to_dict(f), sort_keys=True) + "\n"


def loads_forest(text: str) -> Forest:
    return forest_from_dict(json.loads(text))
