"""Per-point importance targets and the guided down-sampling pipeline.

A point of a generated cloud falls into one of three informal groups: queried
points in sparse regions (critical, strongly negative importance target),
queried points in crowded regions (mildly negative target), and unqueried
points, whose scaled distance to the reference surface separates redundant
near-surface points from outliers (positive target).
Scores feed a logistic keep-probability and a Bernoulli thinning step that
runs before the final farthest-point pass, so outliers are dropped before
FPS gets a chance to favour them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import NeighborIndex, PointCloud, as_cloud, fps_indices, mean_nn_spacing
from .errors import InsufficientPointsError, ShapeMismatchError
from .metrics import query_frequencies

__all__ = [
    "ScoredCloud",
    "SamplerParams",
    "g_target",
    "score_loss",
    "existence_prob",
    "calibrate_t",
    "Scorer",
    "OracleScorer",
    "ConstantScorer",
    "SCORERS",
    "get_scorer",
    "jittered_upsample",
    "guided_downsample",
    "guided_downsample_trace",
    "DownsampleTrace",
]


@dataclass(frozen=True)
class ScoredCloud:
    """A cloud plus one finite scalar score per point."""

    cloud: PointCloud
    scores: np.ndarray

    def __post_init__(self):
        scores = np.ascontiguousarray(np.asarray(self.scores, dtype=np.float64))
        if scores.shape != (self.cloud.size,):
            raise ShapeMismatchError(
                f"scores shape {scores.shape} does not match cloud size {self.cloud.size}"
            )
        if not np.isfinite(scores).all():
            raise ShapeMismatchError("scores must be finite")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)


@dataclass(frozen=True)
class SamplerParams:
    """Knobs of the guided down-sampling pipeline.

    beta/gamma shape the keep probability ``sigmoid(-beta*z - gamma)``;
    t scales distances in the importance target for unqueried points
    (see ``calibrate_t`` for the data-driven choice); s is the upscale
    factor applied to the scored cloud before thinning.
    """

    beta: float = 9.0
    gamma: float = 1.0
    t: float = 10.0
    s: int = 2

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be > 0")
        if self.s < 1:
            raise ValueError("s must be >= 1")


def g_target(coarse, gt, gt_index: NeighborIndex | None = None, t: float = 10.0) -> np.ndarray:
    """Per-point importance target for ``coarse`` against reference ``gt``.

    With ``n_x`` the number of gt points whose nearest coarse point is x:

        g(x) = -log2(n_x * |coarse|/|gt| + 1)   if n_x > 0   (queried: g <= 0)
        g(x) = t * min_{y in gt} ||x - y||      if n_x = 0   (unqueried: g >= 0)

    The +1 bias makes both branches meet at 0, and the sign splits useful
    points from redundant or outlying ones.
    """
    coarse, gt = as_cloud(coarse), as_cloud(gt)
    if gt_index is None:
        gt_index = NeighborIndex(gt)
    counts = query_frequencies(gt, NeighborIndex(coarse)).counts
    _, dist_to_gt = gt_index.nearest_one(coarse.points)
    ratio = coarse.size / gt.size
    return np.where(
        counts > 0,
        -np.log2(ratio * counts + 1.0),
        dist_to_gt * t,
    )


def score_loss(predicted, target) -> float:
    """Mean absolute regression error between predicted and target scores."""
    z = np.asarray(predicted, dtype=np.float64)
    g = np.asarray(target, dtype=np.float64)
    if z.shape != g.shape:
        raise ShapeMismatchError(f"shape mismatch: {z.shape} vs {g.shape}")
    return float(np.abs(z - g).mean())


def existence_prob(z, beta: float, gamma: float):
    """Keep probability ``sigmoid(-(beta*z + gamma))``, numerically stable.

    Strictly decreasing in z for beta > 0: low scores (important points)
    survive, high scores (outliers) are thinned.
    """
    u = beta * np.asarray(z, dtype=np.float64) + gamma
    out = np.empty_like(u, dtype=np.float64)
    pos = u >= 0
    out[pos] = np.exp(-u[pos]) / (1.0 + np.exp(-u[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(u[~pos]))
    if out.ndim == 0:
        return float(out)
    return out


def calibrate_t(coarse, gt, q: float = 0.95, target_value: float = 2.0) -> float:
    """Distance scale mapping the q-quantile unqueried distance to target_value.

    Keeps the positive branch of the importance target comparable in
    magnitude to the negative log-frequency branch.  Falls back to the
    overall distance quantile when every point is queried.
    """
    coarse, gt = as_cloud(coarse), as_cloud(gt)
    counts = query_frequencies(gt, NeighborIndex(coarse)).counts
    _, dist = NeighborIndex(gt).nearest_one(coarse.points)
    pool = dist[counts == 0] if (counts == 0).any() else dist
    ref = float(np.quantile(pool, q))
    if ref <= 0:
        return target_value / max(float(dist.max()), 1e-12)
    return target_value / ref


class Scorer:
    """Assigns one importance score per point; lower means more important."""

    name = "base"

    def score(self, cloud: PointCloud, gt: PointCloud | None = None) -> np.ndarray:
        raise NotImplementedError


class OracleScorer(Scorer):
    """Scores points with the exact importance target (requires the reference)."""

    name = "oracle"

    def __init__(self, t: float | None = None):
        self.t = t

    def score(self, cloud, gt=None):
        if gt is None:
            raise ValueError("the oracle scorer requires a reference cloud")
        t = self.t if self.t is not None else calibrate_t(cloud, gt)
        return g_target(cloud, gt, t=t)


class ConstantScorer(Scorer):
    """Ablation baseline: every point gets the same score."""

    name = "constant"

    def __init__(self, value: float = 0.0):
        self.value = value

    def score(self, cloud, gt=None):
        return np.full(as_cloud(cloud).size, self.value)


SCORERS = {"oracle": OracleScorer, "constant": ConstantScorer}


def get_scorer(name: str, **kwargs) -> Scorer:
    """Look up a scorer implementation by its registered name."""
    try:
        return SCORERS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown scorer {name!r}; options: {sorted(SCORERS)}") from None


def jittered_upsample(
    scored: ScoredCloud, s: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Replicate each point s times, jittering all but the first replica.

    Jitter is Gaussian with sigma = 0.25 x the cloud's mean neighbour
    spacing.  Replicas share their source point's score.
    """
    pts = scored.cloud.points
    n = pts.shape[0]
    if s == 1:
        return pts.copy(), scored.scores.copy()
    sigma = 0.25 * mean_nn_spacing(scored.cloud)
    offsets = sigma * rng.standard_normal((n, s, 3))
    offsets[:, 0, :] = 0.0
    up = (pts[:, None, :] + offsets).reshape(n * s, 3)
    return up, np.repeat(scored.scores, s)


@dataclass(frozen=True)
class DownsampleTrace:
    """Intermediate state of one guided down-sampling run, for inspection."""

    up_points: np.ndarray
    up_scores: np.ndarray
    keep_prob: np.ndarray
    kept: np.ndarray
    refilled: np.ndarray
    union: np.ndarray


def guided_downsample_trace(
    coarse_scored: ScoredCloud,
    rec: PointCloud | None,
    params: SamplerParams,
    m: int,
    seed: int,
) -> tuple[PointCloud, DownsampleTrace]:
    """Guided down-sampling with its intermediate quantities.

    Pipeline: jittered s-fold upsample of the scored cloud, independent
    Bernoulli thinning with keep probability ``sigmoid(-beta*z - gamma)``,
    union with the reconstruction cloud, deterministic top-probability
    refill if the union falls short of m, and a final farthest-point pass
    down to exactly m points.  Fully determined by ``seed``: the jitter and
    thinning use two independent counter-based streams spawned from it.
    """
    ss = np.random.SeedSequence(seed)
    jit_ss, bern_ss = ss.spawn(2)
    jit_rng = np.random.Generator(np.random.Philox(jit_ss))
    bern_rng = np.random.Generator(np.random.Philox(bern_ss))

    up_pts, up_scores = jittered_upsample(coarse_scored, params.s, jit_rng)
    p = existence_prob(up_scores, params.beta, params.gamma)
    kept = bern_rng.random(len(up_pts)) < p

    rec_pts = rec.points if rec is not None else np.empty((0, 3))
    refilled = np.zeros(len(up_pts), dtype=bool)
    have = int(kept.sum()) + len(rec_pts)
    if have < m:
        dropped = np.nonzero(~kept)[0]
        order = dropped[np.lexsort((dropped, -p[dropped]))]
        need = m - have
        refill_ids = order[:need]
        refilled[refill_ids] = True
        if have + len(refill_ids) < m:
            raise InsufficientPointsError(
                f"only {have + len(refill_ids)} points available, need {m}"
            )
    union = np.concatenate([up_pts[kept | refilled], rec_pts])
    out = PointCloud(union[fps_indices(union, m, 0)])
    return out, DownsampleTrace(
        up_points=up_pts,
        up_scores=up_scores,
        keep_prob=p,
        kept=kept,
        refilled=refilled,
        union=union,
    )


def guided_downsample(
    coarse_scored: ScoredCloud,
    rec: PointCloud | None,
    params: SamplerParams,
    m: int,
    seed: int,
) -> PointCloud:
    """Exactly m points chosen by score-guided thinning followed by FPS."""
    out, _ = guided_downsample_trace(coarse_scored, rec, params, m, seed)
    return out
