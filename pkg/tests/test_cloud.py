import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_knn
from pcdist import (
    EmptyCloudError,
    InvalidCountError,
    NonFiniteError,
    PointCloud,
    build_index,
    fps,
    fps_indices,
    mean_nn_spacing,
    nearest,
)


class TestPointCloud:
    def test_rejects_empty(self):
        with pytest.raises(EmptyCloudError):
            PointCloud(np.empty((0, 3)))

    def test_rejects_nan_and_inf(self):
        with pytest.raises(NonFiniteError):
            PointCloud([[0.0, np.nan, 0.0]])
        with pytest.raises(NonFiniteError):
            PointCloud([[np.inf, 0.0, 0.0]])

    def test_immutable_backing_array(self):
        c = PointCloud([[1.0, 2.0, 3.0]])
        with pytest.raises(ValueError):
            c.points[0, 0] = 5.0

    def test_size(self, rng):
        c = PointCloud(rng.random((17, 3)))
        assert c.size == 17 and len(c) == 17


class TestNeighborIndex:
    def test_single_point_cloud(self):
        idx = build_index(PointCloud([[1.0, 2.0, 3.0]]))
        pid, d = nearest(idx, (1.0, 2.0, 7.0), 1)[0]
        assert pid == 0 and d == 4.0

    def test_query_on_indexed_point_is_zero(self, rng):
        pts = rng.random((50, 3))
        idx = build_index(PointCloud(pts))
        pid, d = idx.query(pts[13], 1)[0]
        assert pid == 13 and d == 0.0

    def test_hand_example(self):
        idx = build_index(PointCloud([[1, 0, 0], [0, 2, 0]]))
        assert nearest(idx, (0, 0, 0), 1) == [(0, 1.0)]

    def test_k_clamped_to_size(self, rng):
        idx = build_index(PointCloud(rng.random((5, 3))))
        res = idx.query(rng.random(3), 12)
        assert len(res) == 5
        d = [x[1] for x in res]
        assert d == sorted(d)

    def test_k_must_be_positive(self, rng):
        idx = build_index(PointCloud(rng.random((5, 3))))
        with pytest.raises(InvalidCountError):
            idx.query(np.zeros(3), 0)

    def test_tie_break_lower_index(self):
        # Two points equidistant from the query: the lower index must win,
        # for k=1 and within larger k results.
        pts = np.array([[0, 0, 2.0], [2.0, 0, 0], [0, 0, -2.0], [5, 5, 5]])
        idx = build_index(PointCloud(pts))
        ids, _ = idx.query_batch(np.zeros((1, 3)), 3)
        assert ids[0].tolist() == [0, 1, 2]

    def test_duplicate_points_tie(self):
        pts = np.array([[1.0, 1, 1], [0.5, 0, 0], [1.0, 1, 1]])
        idx = build_index(PointCloud(pts))
        assert idx.query((1.0, 1.0, 1.0), 1)[0][0] == 0

    def test_matches_brute_force_2048(self, rng):
        pts = rng.random((2048, 3))
        idx = build_index(PointCloud(pts))
        queries = rng.random((100, 3))
        ids, dists = idx.query_batch(queries, 4)
        for r in range(100):
            oids, od = brute_knn(pts, queries[r], 4)
            assert ids[r].tolist() == oids.tolist()
            np.testing.assert_array_equal(dists[r], od)

    @settings(deadline=None, max_examples=40)
    @given(
        n=st.integers(1, 512),
        k=st.integers(1, 8),
        seed=st.integers(0, 2**31),
    )
    def test_matches_brute_force_property(self, n, k, seed):
        r = np.random.default_rng(seed)
        pts = r.random((n, 3))
        q = r.random((5, 3))
        idx = build_index(PointCloud(pts))
        ids, dists = idx.query_batch(q, k)
        for row in range(5):
            oids, od = brute_knn(pts, q[row], k)
            assert ids[row].tolist() == oids.tolist()
            np.testing.assert_array_equal(dists[row], od)

    def test_equal_clouds_answer_identically(self, rng):
        pts = rng.random((64, 3))
        q = rng.random((10, 3))
        a = build_index(PointCloud(pts.copy()))
        b = build_index(PointCloud(pts.copy()))
        ia, da = a.query_batch(q, 3)
        ib, db = b.query_batch(q, 3)
        np.testing.assert_array_equal(ia, ib)
        np.testing.assert_array_equal(da, db)


class TestFps:
    def test_full_sample_is_permutation(self, rng):
        pts = rng.random((40, 3))
        ids = fps_indices(pts, 40, 7)
        assert sorted(ids.tolist()) == list(range(40))

    def test_m_one_returns_seed(self, rng):
        pts = rng.random((10, 3))
        assert fps_indices(pts, 1, 4).tolist() == [4]

    def test_collinear_tie_rule(self):
        pts = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]], float)
        assert fps_indices(pts, 3, 0).tolist() == [0, 3, 1]

    def test_out_of_range(self, rng):
        pts = rng.random((10, 3))
        with pytest.raises(InvalidCountError):
            fps_indices(pts, 0, 0)
        with pytest.raises(InvalidCountError):
            fps_indices(pts, 11, 0)
        with pytest.raises(InvalidCountError):
            fps_indices(pts, 3, 10)

    @settings(deadline=None, max_examples=25)
    @given(n=st.integers(2, 100), seed=st.integers(0, 2**31))
    def test_subset_no_duplicates_deterministic(self, n, seed):
        r = np.random.default_rng(seed)
        pts = r.random((n, 3))
        m = int(r.integers(1, n + 1))
        s = int(r.integers(0, n))
        ids = fps_indices(pts, m, s)
        assert len(set(ids.tolist())) == m
        assert np.array_equal(ids, fps_indices(pts, m, s))

    def test_cloud_wrapper(self, rng):
        c = PointCloud(rng.random((30, 3)))
        sub = fps(c, 10, 0)
        assert sub.size == 10
        # every output point exists in the input
        full = {tuple(p) for p in c.points}
        assert all(tuple(p) in full for p in sub.points)


def test_mean_nn_spacing_grid():
    g = np.stack(
        np.meshgrid(np.arange(4.0), np.arange(4.0), [0.0]), axis=-1
    ).reshape(-1, 3)
    assert mean_nn_spacing(PointCloud(g)) == 1.0
    assert mean_nn_spacing(PointCloud([[0, 0, 0]])) == 0.0
