"""Seeded synthetic degradations and analytic test shapes.

The central generator mixes a complete-but-noisy resample of a shape with a
dense clean partial view and farthest-point-samples the union back to a fixed
size, which produces clouds whose density imbalance and noise level are
independently controllable.  Noise magnitudes are expressed in units of the
ground truth's mean nearest-neighbour spacing, since absolute units would be
meaningless across differently scaled shapes.

All generators are pure functions of their inputs and seed: repeated calls
are bit-identical.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .cloud import PointCloud, as_cloud, fps_indices, mean_nn_spacing
from .errors import InsufficientPointsError, InvalidCountError, ShapeMismatchError

__all__ = [
    "DegradationSpec",
    "mix_noise_imbalance",
    "inject_outliers",
    "curvature_mix_sample",
    "curvature_mix_indices",
    "synth_shapes",
    "SHAPE_KINDS",
]

SHAPE_KINDS = ("sphere", "torus", "box", "lshape")


@dataclass(frozen=True)
class DegradationSpec:
    """Seeded recipe turning a ground-truth cloud into a degraded one.

    noise_sigma is relative: the absolute noise scale is
    ``noise_sigma * mean_nn_spacing(gt)``.  imbalance_n is the size of the
    complete noisy component; smaller values starve the unseen region and
    raise the density imbalance of the output.
    """

    seed: int
    noise_sigma: float = 0.0
    imbalance_n: int = 2048
    partial_keep_fraction: float = 0.5
    outlier_fraction: float = 0.0
    outlier_radius: float = 10.0
    curvature_ratio: float = 0.0
    target_size: int = 2048

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.imbalance_n < 1:
            raise ValueError("imbalance_n must be >= 1")
        if not 0.0 < self.partial_keep_fraction <= 1.0:
            raise ValueError("partial_keep_fraction must be in (0, 1]")
        if not 0.0 <= self.outlier_fraction < 1.0:
            raise ValueError("outlier_fraction must be in [0, 1)")
        if not 0.0 <= self.curvature_ratio <= 1.0:
            raise ValueError("curvature_ratio must be in [0, 1]")
        if self.target_size < 1:
            raise ValueError("target_size must be >= 1")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DegradationSpec":
        return cls(**json.loads(text))


def mix_noise_imbalance(gt, spec: DegradationSpec) -> PointCloud:
    """Complete-noisy plus partial-clean mixture, resampled to target size.

    1. ``imbalance_n`` points resampled from ``gt`` get isotropic Gaussian
       noise of ``noise_sigma`` mean-spacing units.
    2. A clean half-space cut (seeded direction through the centroid,
       keeping ``partial_keep_fraction`` of the points) is reduced to
       ``target_size`` points by FPS seeded at the most extreme point.
    3. The concatenation [partial, noisy] is FPS-downsampled to exactly
       ``target_size``, starting from the first partial point.
    """
    gt = as_cloud(gt)
    if gt.size < spec.target_size:
        raise InsufficientPointsError(
            f"ground truth has {gt.size} points, need >= {spec.target_size}"
        )
    rng = np.random.default_rng(spec.seed)
    pts = gt.points

    # Seeded cut direction, then the noisy resample, then the noise draws:
    # the draw order is fixed so runs with different sigma share geometry.
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    proj = (pts - pts.mean(axis=0)) @ u
    thr = np.quantile(proj, 1.0 - spec.partial_keep_fraction)
    part_ids = np.nonzero(proj >= thr)[0]
    if len(part_ids) < spec.target_size:
        order = np.argsort(-proj, kind="stable")
        part_ids = order[: spec.target_size]
    elif len(part_ids) > spec.target_size:
        seed_local = int(np.argmax(proj[part_ids]))
        part_ids = part_ids[fps_indices(pts[part_ids], spec.target_size, seed_local)]
    partial = pts[part_ids]

    replace = spec.imbalance_n > gt.size
    pick = rng.choice(gt.size, size=spec.imbalance_n, replace=replace)
    sigma_abs = spec.noise_sigma * mean_nn_spacing(gt)
    noisy = pts[pick] + sigma_abs * rng.standard_normal((spec.imbalance_n, 3))

    union = np.concatenate([partial, noisy])
    out = union[fps_indices(union, spec.target_size, 0)]
    return PointCloud(out)


def inject_outliers(cloud, fraction: float, radius: float, seed: int) -> PointCloud:
    """Replace a seeded random subset with far-away shell points.

    ``floor(fraction * n)`` points move onto the sphere of the given radius
    around the centroid, in uniformly random directions.  fraction 0 returns
    the input unchanged.
    """
    cloud = as_cloud(cloud)
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    k = int(fraction * cloud.size)
    if k == 0:
        return cloud
    rng = np.random.default_rng(seed)
    idx = rng.choice(cloud.size, size=k, replace=False)
    dirs = rng.standard_normal((k, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = cloud.points.copy()
    pts[idx] = cloud.points.mean(axis=0) + dirs * radius
    return PointCloud(pts)


def curvature_mix_indices(
    points: np.ndarray, curvatures: np.ndarray, ratio: float, m: int, seed: int
) -> np.ndarray:
    """Indices for a curvature-weighted / blue-noise mixed subsample.

    ``floor(ratio * m)`` indices are drawn with probability proportional to
    the curvature weights (exponential-race sampling, so any constant
    rescaling of the weights leaves the draw unchanged); the remainder fills
    in via farthest-point selection seeded by the already-drawn set, the
    stand-in for Poisson-disk spacing.
    """
    pts = np.asarray(points, dtype=np.float64)
    w = np.asarray(curvatures, dtype=np.float64)
    n = pts.shape[0]
    if w.shape != (n,):
        raise ShapeMismatchError(
            f"curvatures shape {w.shape} does not match {n} points"
        )
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    if not 1 <= m <= n:
        raise InvalidCountError(f"sample size {m} not in [1, {n}]")
    rng = np.random.default_rng(seed)
    keys = rng.exponential(1.0, n) / np.maximum(w, 1e-300)
    seed_id = int(rng.integers(n))
    k_c = int(ratio * m)
    if k_c == 0:
        return fps_indices(pts, m, seed_id)
    curv_ids = np.argsort(keys, kind="stable")[:k_c]
    if k_c == m:
        return curv_ids
    return fps_indices(pts, m, preselected=curv_ids)


def curvature_mix_sample(
    gt_dense, curvatures, ratio: float, m: int, seed: int
) -> PointCloud:
    """Curvature-weighted mixture sample of ``m`` points (see curvature_mix_indices)."""
    gt_dense = as_cloud(gt_dense)
    ids = curvature_mix_indices(gt_dense.points, curvatures, ratio, m, seed)
    return PointCloud(gt_dense.points[ids])


def _sample_sphere(n, rng):
    r = 0.5
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return r * v, np.full(n, 1.0 / r)


def _sample_torus(n, rng):
    R, r = 0.35, 0.15
    u = np.empty(0)
    v = np.empty(0)
    while len(v) < n:
        cand_u = rng.uniform(0.0, 2 * np.pi, 2 * n)
        cand_v = rng.uniform(0.0, 2 * np.pi, 2 * n)
        accept = rng.uniform(0.0, 1.0, 2 * n) < (R + r * np.cos(cand_v)) / (R + r)
        u = np.concatenate([u, cand_u[accept]])
        v = np.concatenate([v, cand_v[accept]])
    u, v = u[:n], v[:n]
    ring = R + r * np.cos(v)
    pts = np.stack([ring * np.cos(u), ring * np.sin(u), r * np.sin(v)], axis=1)
    curv = np.abs(np.cos(v)) / (r * ring)
    return pts, curv


def _edge_proxy(margin):
    # Curvature concentrates at the solid's edges; use a sharpened inverse
    # of the in-face distance to the nearest boundary edge.
    return 1.0 / (0.02 + margin)


def _sample_box(n, rng):
    sides = np.array([1.0, 0.7, 0.5])
    half = sides / 2.0
    # Face pairs perpendicular to each axis, weighted by area.
    areas = np.array(
        [sides[1] * sides[2], sides[0] * sides[2], sides[0] * sides[1]]
    )
    areas = np.repeat(areas, 2)
    face = rng.choice(6, size=n, p=areas / areas.sum())
    uv = rng.uniform(-1.0, 1.0, (n, 2))
    pts = np.empty((n, 3))
    margin = np.empty(n)
    for f in range(6):
        sel = face == f
        axis = f // 2
        sign = 1.0 if f % 2 == 0 else -1.0
        others = [a for a in range(3) if a != axis]
        pts[sel, axis] = sign * half[axis]
        pts[sel, others[0]] = uv[sel, 0] * half[others[0]]
        pts[sel, others[1]] = uv[sel, 1] * half[others[1]]
        m0 = half[others[0]] - np.abs(pts[sel, others[0]])
        m1 = half[others[1]] - np.abs(pts[sel, others[1]])
        margin[sel] = np.minimum(m0, m1)
    return pts, _edge_proxy(margin)


# L-shaped prism: unit L footprint extruded to height 0.4, centred at origin.
_L_OUTLINE = np.array(
    [[0, 0], [1, 0], [1, 0.5], [0.5, 0.5], [0.5, 1], [0, 1]], dtype=np.float64
)
_L_HEIGHT = 0.4
_L_CENTER = np.array([0.5, 0.5, _L_HEIGHT / 2.0])


def _poly_margin(xy):
    """Distance to the nearest outline segment of the L footprint."""
    best = np.full(len(xy), np.inf)
    m = len(_L_OUTLINE)
    for i in range(m):
        a = _L_OUTLINE[i]
        b = _L_OUTLINE[(i + 1) % m]
        ab = b - a
        t = np.clip(((xy - a) @ ab) / (ab @ ab), 0.0, 1.0)
        proj = a + t[:, None] * ab
        best = np.minimum(best, np.linalg.norm(xy - proj, axis=1))
    return best


def _in_lshape(xy):
    return (
        (xy[:, 0] >= 0)
        & (xy[:, 0] <= 1)
        & (xy[:, 1] >= 0)
        & (xy[:, 1] <= 1)
        & ~((xy[:, 0] > 0.5) & (xy[:, 1] > 0.5))
    )


def _sample_lshape(n, rng):
    top_area = 0.75
    seg = np.diff(np.vstack([_L_OUTLINE, _L_OUTLINE[:1]]), axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    side_area = seg_len.sum() * _L_HEIGHT
    total = 2 * top_area + side_area
    kinds = rng.choice(
        2 + len(seg_len),
        size=n,
        p=np.concatenate([[top_area / total, top_area / total], seg_len * _L_HEIGHT / total]),
    )
    pts = np.empty((n, 3))
    margin = np.empty(n)
    # Top/bottom faces: rejection-sample the L footprint.
    for f, z in ((0, _L_HEIGHT), (1, 0.0)):
        sel = np.nonzero(kinds == f)[0]
        got = 0
        while got < len(sel):
            cand = rng.uniform(0.0, 1.0, (2 * (len(sel) - got) + 8, 2))
            cand = cand[_in_lshape(cand)][: len(sel) - got]
            idx = sel[got : got + len(cand)]
            pts[idx, 0:2] = cand
            pts[idx, 2] = z
            margin[idx] = np.minimum(_poly_margin(cand), _L_HEIGHT / 2.0)
            got += len(cand)
    # Side faces: one rectangle per outline segment.
    for s in range(len(seg_len)):
        sel = kinds == s + 2
        k = int(sel.sum())
        if k == 0:
            continue
        t = rng.uniform(0.0, 1.0, k)
        z = rng.uniform(0.0, _L_HEIGHT, k)
        a = _L_OUTLINE[s]
        pts[sel, 0:2] = a + t[:, None] * seg[s]
        pts[sel, 2] = z
        m_edge = np.minimum(t, 1.0 - t) * seg_len[s]
        m_z = np.minimum(z, _L_HEIGHT - z)
        margin[sel] = np.minimum(m_edge, m_z)
    return pts - _L_CENTER, _edge_proxy(margin)


_SAMPLERS = {
    "sphere": _sample_sphere,
    "torus": _sample_torus,
    "box": _sample_box,
    "lshape": _sample_lshape,
}


def synth_shapes(kind: str, n: int, seed: int) -> tuple[PointCloud, np.ndarray]:
    """Uniform-area surface sample of an analytic shape plus curvature proxies.

    Shapes are centred at the origin at roughly unit scale.  The curvature
    proxy is exact for the smooth shapes and an edge-proximity surrogate for
    the polyhedral ones.
    """
    if kind not in _SAMPLERS:
        raise ValueError(f"unknown shape kind {kind!r}; options: {SHAPE_KINDS}")
    if n < 64:
        raise InvalidCountError(f"need n >= 64 points, got {n}")
    rng = np.random.default_rng(seed)
    pts, curv = _SAMPLERS[kind](n, rng)
    return PointCloud(pts), curv
