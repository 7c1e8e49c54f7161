import math

import numpy as np
import pytest

from pcdist import (
    ConstantScorer,
    InsufficientPointsError,
    NeighborIndex,
    OracleScorer,
    PointCloud,
    SamplerParams,
    ScoredCloud,
    ShapeMismatchError,
    calibrate_t,
    existence_prob,
    fps,
    g_target,
    get_scorer,
    score_loss,
    synth_shapes,
)
from pcdist.cloud import fps_indices
from pcdist.dsample import guided_downsample, guided_downsample_trace, jittered_upsample


class TestGTarget:
    def test_hand_value_shared_queries(self):
        coarse = PointCloud([[0, 0, 0], [5, 5, 5]])
        gt = PointCloud([[0.01, 0, 0], [0.02, 0, 0]])
        g = g_target(coarse, gt, t=10.0)
        # both gt points query coarse[0]: n=2, |coarse|/|gt|=1 -> -log2(3)
        assert g[0] == pytest.approx(-math.log2(3.0), rel=1e-12)
        # coarse[1] unqueried at distance ~8.6: positive branch
        assert g[1] == pytest.approx(10.0 * np.linalg.norm([5 - 0.02, 5, 5]), rel=1e-9)

    def test_unqueried_distance_scaling(self):
        coarse = PointCloud([[0, 0, 0], [0.1, 0, 0]])
        gt = PointCloud([[0, 0, 0]])
        g = g_target(coarse, gt, t=10.0)
        assert g[0] == pytest.approx(-math.log2(3.0))  # n=1, ratio 2: -log2(2*1+1)
        assert g[1] == pytest.approx(1.0)  # unqueried at distance 0.1, t=10

    def test_branch_boundary_is_zero(self):
        # an unqueried point exactly on the surface has g = 0
        coarse = PointCloud([[0, 0, 0], [0, 0, 0]])
        gt = PointCloud([[0, 0, 0]])
        g = g_target(coarse, gt, t=10.0)
        assert g[1] == 0.0  # duplicate never queried, distance 0

    def test_sign_convention(self, rng):
        gt, _ = synth_shapes("sphere", 512, 1)
        coarse = fps(gt, 128, 0)
        counts = np.zeros(128, int)
        idx = NeighborIndex(coarse)
        ids, _ = idx.nearest_one(gt.points)
        np.add.at(counts, ids, 1)
        g = g_target(coarse, gt, t=5.0)
        assert (g[counts > 0] <= 0).all()
        assert (g[counts == 0] >= 0).all()


def test_g_target_hand_value_ratio_one():
    coarse = PointCloud([[0, 0, 0], [5, 5, 5]])
    gt = PointCloud([[0.001, 0, 0], [0.002, 0, 0]])
    g = g_target(coarse, gt, t=1.0)
    assert g[0] == pytest.approx(-math.log2(3.0), rel=1e-12)


class TestScoreLoss:
    def test_exact_match_zero(self, rng):
        g = rng.random(10)
        assert score_loss(g, g) == 0.0

    def test_constant_offset(self, rng):
        g = rng.random(10)
        assert score_loss(g + 1.0, g) == pytest.approx(1.0, rel=1e-12)

    def test_hand_arithmetic(self):
        assert score_loss([0.0, 2.0], [1.0, 0.0]) == 1.5

    def test_shape_guard(self):
        with pytest.raises(ShapeMismatchError):
            score_loss([1.0], [1.0, 2.0])


class TestExistenceProb:
    def test_paper_operating_point(self):
        assert existence_prob(0.0, 9.0, 1.0) == pytest.approx(
            1.0 / (1.0 + math.e), rel=1e-12
        )

    def test_limits(self):
        assert existence_prob(-1e6, 9.0, 1.0) == pytest.approx(1.0)
        assert existence_prob(1e6, 9.0, 1.0) == pytest.approx(0.0)
        assert existence_prob(123.0, 0.0, 0.0) == 0.5

    def test_strictly_decreasing(self):
        # within the float-representable range of the logistic
        z = np.linspace(-3.5, 3.5, 101)
        p = existence_prob(z, 9.0, 1.0)
        assert (np.diff(p) < 0).all()
        assert ((p > 0) & (p < 1)).all()


class TestScorers:
    def test_registry(self):
        assert isinstance(get_scorer("oracle"), OracleScorer)
        assert isinstance(get_scorer("constant"), ConstantScorer)
        with pytest.raises(ValueError):
            get_scorer("mlp")

    def test_oracle_matches_g_target(self):
        gt, _ = synth_shapes("sphere", 256, 5)
        coarse = fps(gt, 64, 0)
        z = OracleScorer(t=3.0).score(coarse, gt)
        np.testing.assert_array_equal(z, g_target(coarse, gt, t=3.0))

    def test_oracle_requires_gt(self):
        with pytest.raises(ValueError):
            OracleScorer().score(PointCloud([[0, 0, 0]]))

    def test_constant(self):
        z = ConstantScorer(2.5).score(PointCloud([[0, 0, 0], [1, 1, 1]]))
        assert z.tolist() == [2.5, 2.5]

    def test_calibrate_t_maps_quantile_to_two(self):
        gt, _ = synth_shapes("sphere", 1024, 6)
        coarse_pts = fps(gt, 256, 0).points.copy()
        coarse_pts[:10] *= 4.0  # guaranteed unqueried outliers
        coarse = PointCloud(coarse_pts)
        t = calibrate_t(coarse, gt)
        g = g_target(coarse, gt, t=t)
        assert np.quantile(g[g > 0], 0.95) == pytest.approx(2.0, rel=0.35)


def planted_instance(seed, n_out=24, t=0.08):
    # t scales the outliers' importance targets so their keep probability
    # lands near 0.05: low enough to thin, high enough that the Bernoulli
    # survival statistics are non-degenerate.
    gt, _ = synth_shapes("sphere", 4096, seed)
    coarse_pts = gt.points[fps_indices(gt.points, 512, 0)].copy()
    rng = np.random.default_rng(seed + 1)
    dirs = rng.standard_normal((n_out, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    coarse_pts[:n_out] = dirs * 3.0  # outliers at ~6x shape radius
    coarse = PointCloud(coarse_pts)
    z = g_target(coarse, gt, t=t)
    rec = PointCloud(gt.points[fps_indices(gt.points, 256, 1)])
    return gt, ScoredCloud(coarse, z), rec


class TestGuidedDownsample:
    def test_exact_size_and_determinism(self):
        _, scored, rec = planted_instance(3)
        params = SamplerParams(beta=9.0, gamma=1.0, t=0.08, s=2)
        a = guided_downsample(scored, rec, params, 400, seed=7)
        b = guided_downsample(scored, rec, params, 400, seed=7)
        assert a.size == 400
        assert np.array_equal(a.points, b.points)

    def test_output_subset_of_upsampled_union(self):
        _, scored, rec = planted_instance(4)
        params = SamplerParams(beta=9.0, gamma=1.0, t=1.0, s=3)
        out, trace = guided_downsample_trace(scored, rec, params, 300, seed=5)
        pool = {tuple(p) for p in trace.up_points} | {tuple(p) for p in rec.points}
        assert all(tuple(p) in pool for p in out.points)

    def test_no_thinning_reduces_to_fps_of_union(self):
        # beta=0, gamma large negative: keep probability ~1 for every point.
        _, scored, rec = planted_instance(5)
        params = SamplerParams(beta=0.0, gamma=-50.0, t=1.0, s=2)
        out, trace = guided_downsample_trace(scored, rec, params, 350, seed=9)
        assert trace.kept.all()
        union = np.concatenate([trace.up_points, rec.points])
        expect = union[fps_indices(union, 350, 0)]
        assert np.array_equal(out.points, expect)

    def test_outliers_get_lower_keep_probability(self):
        for seed in range(5):
            _, scored, rec = planted_instance(10 + seed)
            p = existence_prob(scored.scores, 9.0, 1.0)
            assert p[:24].mean() < p[24:].mean()

    def test_outlier_removal_matches_bernoulli_model(self):
        # Survival of planted outliers through the thinning stage is a sum
        # of independent Bernoullis with known probabilities.
        total_mean = total_var = survived = 0.0
        n_out = 24
        for seed in range(40):
            _, scored, rec = planted_instance(100 + seed, n_out)
            params = SamplerParams(beta=9.0, gamma=1.0, t=0.08, s=2)
            _, trace = guided_downsample_trace(scored, rec, params, 400, seed=seed)
            out_mask = np.zeros(len(trace.up_points), bool)
            out_mask[: n_out * params.s] = True  # replicas of planted outliers
            p = trace.keep_prob[out_mask]
            total_mean += p.sum()
            total_var += (p * (1 - p)).sum()
            survived += int(trace.kept[out_mask].sum())
        sigma = math.sqrt(total_var)
        assert abs(survived - total_mean) <= 3.0 * sigma + 1e-9

    def test_improves_chamfer_over_plain_fps(self):
        wins = 0
        for seed in range(10):
            gt, scored, rec = planted_instance(200 + seed)
            ref = fps(gt, 400, 2)
            params = SamplerParams(beta=9.0, gamma=1.0, t=0.08, s=2)
            guided = guided_downsample(scored, rec, params, 400, seed=seed)
            union = np.concatenate([scored.cloud.points, rec.points])
            plain = PointCloud(union[fps_indices(union, 400, 0)])
            from pcdist import chamfer

            if chamfer(guided, ref, "T").value < chamfer(plain, ref, "T").value:
                wins += 1
        assert wins >= 9

    def test_fallback_refills_highest_probability(self):
        # Huge gamma thins everything; the fallback must still deliver m
        # points, preferring the highest keep probabilities.
        cloud = PointCloud(np.random.default_rng(0).random((50, 3)))
        scored = ScoredCloud(cloud, np.linspace(-1, 1, 50))
        params = SamplerParams(beta=9.0, gamma=60.0, t=1.0, s=1)
        out, trace = guided_downsample_trace(scored, None, params, 20, seed=1)
        assert out.size == 20
        assert trace.kept.sum() == 0
        assert trace.refilled.sum() == 20
        # refilled points are exactly the 20 lowest scores (highest p)
        assert set(np.nonzero(trace.refilled)[0]) == set(range(20))

    def test_insufficient_points(self):
        cloud = PointCloud(np.random.default_rng(0).random((10, 3)))
        scored = ScoredCloud(cloud, np.zeros(10))
        with pytest.raises(InsufficientPointsError):
            guided_downsample(scored, None, SamplerParams(s=1), 11, seed=0)

    def test_jittered_upsample_shares_scores(self):
        cloud = PointCloud(np.random.default_rng(1).random((30, 3)))
        scored = ScoredCloud(cloud, np.arange(30.0))
        rng = np.random.Generator(np.random.Philox(7))
        up, z = jittered_upsample(scored, 3, rng)
        assert up.shape == (90, 3) and z.shape == (90,)
        np.testing.assert_array_equal(z.reshape(30, 3), np.repeat(np.arange(30.0), 3).reshape(30, 3))
        np.testing.assert_array_equal(up[::3], cloud.points)  # first replica unjittered


def test_scored_cloud_validation(rng):
    c = PointCloud(rng.random((5, 3)))
    with pytest.raises(ShapeMismatchError):
        ScoredCloud(c, np.zeros(4))
    with pytest.raises(ShapeMismatchError):
        ScoredCloud(c, np.array([0.0, 1, 2, 3, np.nan]))


def test_sampler_params_validation():
    with pytest.raises(ValueError):
        SamplerParams(t=0.0)
    with pytest.raises(ValueError):
        SamplerParams(s=0)
