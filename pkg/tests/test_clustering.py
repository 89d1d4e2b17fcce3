import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dyadnet.clustering import (
    best_of_grid,
    cluster_segments,
    cosine_distance,
    cosine_distance_matrix,
    default_grid,
    linkage_tree,
    tune_threshold,
)
from dyadnet.errors import EmptyGrid, EmptyTable, SingleClassDev, ZeroVector
from dyadnet.formats import make_table
from dyadnet.synthgen import ConversationSpec, EmbeddingSpec, gen_conversation, gen_embeddings

from conftest import unit_table
from oracles import merge_heights_oracle, merge_oracle

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def nonzero_points(min_n=1, max_n=8, dim=3):
    return st.lists(
        arrays(np.float64, dim, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3),
        min_size=min_n,
        max_size=max_n,
    )


def partition(c, ids):
    pos = {sid: i for i, sid in enumerate(ids)}
    return {frozenset(pos[s] for s in members) for members in c.clusters()}


def random_rotation(rng, dim):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q * np.sign(np.diag(r))


def test_default_grid():
    g = default_grid()
    assert len(g) == 29 and g[0] == 0.1 and g[-1] == 1.5
    assert all(abs(b - a - 0.05) < 1e-12 for a, b in zip(g, g[1:]))


def test_cosine_distance_values():
    assert cosine_distance([1, 0], [0, 1]) == pytest.approx(1.0)
    assert cosine_distance([1, 0], [-1, 0]) == 2.0
    assert cosine_distance([1, 1], [2, 2]) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ZeroVector):
        cosine_distance([0, 0], [1, 0])


def test_two_tight_groups():
    pts = [[1, 0.01], [1, -0.01], [0.01, 1], [-0.01, 1]]
    c = cluster_segments(unit_table(pts), 0.5)
    assert c.n_clusters == 2
    assert c.assignment == {"s000": 0, "s001": 0, "s002": 1, "s003": 1}
    np.testing.assert_allclose(np.linalg.norm(c.centroids, axis=1), 1.0)


def test_threshold_endpoints():
    pts = [[1, 0], [0, 1], [-1, 0]]
    assert cluster_segments(unit_table(pts), 1e-9).n_clusters == 3
    assert cluster_segments(unit_table(pts), 2.0).n_clusters == 1


def test_single_point_and_empty():
    assert cluster_segments(unit_table([[1, 2]]), 0.3).n_clusters == 1
    with pytest.raises(EmptyTable):
        cluster_segments(make_table({}), 0.3)
    with pytest.raises(ValueError):
        cluster_segments(unit_table([[1, 2]]), 0)


@given(nonzero_points(), st.floats(0.01, 1.99))
def test_matches_brute_force_merge_oracle(points, thr):
    table = unit_table(points)
    got = partition(cluster_segments(table, thr), table.ids)
    assert got == merge_oracle([list(p) for p in points], thr)


@given(nonzero_points(min_n=2))
def test_merge_heights_match_oracle(points):
    tree = linkage_tree(unit_table(points))
    np.testing.assert_allclose([h for _, _, h in tree.merges], merge_heights_oracle(points), atol=1e-9)


def test_exact_ties_follow_the_smallest_pair():
    # square: both diagonals tie, and the four edges tie
    pts = [[1, 0], [0, 1], [-1, 0], [0, -1]]
    tree = linkage_tree(unit_table(pts))
    assert tree.merges[0][:2] == (0, 1)
    assert partition(cluster_segments(unit_table(pts), 1.0), unit_table(pts).ids) == merge_oracle(pts, 1.0)


@given(nonzero_points(min_n=2, max_n=12, dim=4))
def test_cluster_count_non_increasing_in_threshold(points):
    tree = linkage_tree(unit_table(points))
    counts = [len(set(tree.labels_at(t))) for t in default_grid()]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


@given(nonzero_points(min_n=2, max_n=12, dim=5), st.integers(0, 2**32 - 1), st.floats(0.05, 1.5))
def test_rotation_invariance(points, seed, thr):
    rot = random_rotation(np.random.default_rng(seed), 5)
    a = unit_table(points)
    b = unit_table([rot @ p for p in points])
    np.testing.assert_allclose(
        cosine_distance_matrix(a.matrix()), cosine_distance_matrix(b.matrix()), atol=1e-9
    )
    ha = [h for *_, h in linkage_tree(a).merges]
    hb = [h for *_, h in linkage_tree(b).merges]
    np.testing.assert_allclose(ha, hb, atol=1e-9)
    # skip thresholds sitting on a merge height, where rounding may flip the cut
    if all(abs(h - thr) > 1e-7 for h in ha):
        assert partition(cluster_segments(a, thr), a.ids) == partition(cluster_segments(b, thr), b.ids)


def test_scale_invariance(rng):
    pts = rng.normal(size=(10, 3))
    a = cluster_segments(unit_table(pts), 0.4)
    b = cluster_segments(unit_table(pts * rng.uniform(0.1, 10, (10, 1))), 0.4)
    assert a.assignment == b.assignment


def test_best_of_grid_prefers_smallest_on_ties():
    assert best_of_grid([0.2, 0.4, 0.6], [0.5, 0.9, 0.9]) == 0.4


def _dev_recording(n_speakers, seed):
    t = gen_conversation(ConversationSpec(n_speakers=n_speakers, duration=400, seed=seed, recording_id=f"r{seed}"))
    e = gen_embeddings(t, EmbeddingSpec(dim=8, seed=seed))
    return e, t, n_speakers == 2


def test_tuning_picks_a_threshold_between_noise_and_centroid_gap():
    dev = [_dev_recording(n, seed) for seed, n in enumerate([1, 2, 3, 2, 1, 2, 3, 2])]
    report = tune_threshold(dev, [0.005, 0.3, 0.5, 1.9])
    assert report.accuracy_per_threshold[1:3] == [1.0, 1.0]
    assert report.best_threshold == 0.3
    assert report.accuracy_per_threshold[3] == 0.5


def test_tuning_single_element_grid_and_errors():
    dev = [_dev_recording(1, 0), _dev_recording(2, 1)]
    assert tune_threshold(dev, [0.7]).best_threshold == 0.7
    with pytest.raises(EmptyGrid):
        tune_threshold(dev, [])
    with pytest.raises(SingleClassDev):
        tune_threshold([_dev_recording(2, 1)], [0.5])
