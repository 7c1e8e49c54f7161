"""Independent brute-force re-implementations used as test oracles.

Everything here is written against full O(n^2) distance matrices, with no
shared code paths with the library: full-matrix norms, explicit loops over
directions, and factorial enumeration for assignments.  Deliberately slow.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def dist_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))


def brute_knn(points: np.ndarray, query: np.ndarray, k: int):
    """Exact k-NN by full scan with (distance, index) ordering."""
    d = np.sqrt(((query[None, :] - points) ** 2).sum(-1))
    order = np.lexsort((np.arange(len(points)), d))[: min(k, len(points))]
    return order, d[order]


def nn_ids_dists(a: np.ndarray, b: np.ndarray):
    """Nearest neighbour in b of each a row, lower index on ties."""
    D = dist_matrix(a, b)
    ids = np.argmin(D, axis=1)
    return ids, D[np.arange(len(a)), ids]


def chamfer_brute(a: np.ndarray, b: np.ndarray, squared: bool) -> float:
    _, d_ab = nn_ids_dists(a, b)
    _, d_ba = nn_ids_dists(b, a)
    if squared:
        return float((d_ab**2).mean() + (d_ba**2).mean())
    return float(d_ab.mean() + d_ba.mean())


def hausdorff_brute(a: np.ndarray, b: np.ndarray) -> float:
    _, d_ab = nn_ids_dists(a, b)
    _, d_ba = nn_ids_dists(b, a)
    return float(max(d_ab.max(), d_ba.max()))


def query_counts_brute(src: np.ndarray, tgt: np.ndarray) -> np.ndarray:
    ids, _ = nn_ids_dists(src, tgt)
    counts = np.zeros(len(tgt), dtype=np.int64)
    for i in ids:
        counts[i] += 1
    return counts


def dcd_brute(
    a: np.ndarray, b: np.ndarray, alpha: float, lam: float = 1.0, squared: bool = True
) -> float:
    """Density-aware distance straight from its definition, per direction."""

    def one_direction(src, tgt):
        ids, d = nn_ids_dists(src, tgt)
        counts = query_counts_brute(src, tgt)
        total = 0.0
        for i in range(len(src)):
            arg = d[i] ** 2 if squared else d[i]
            total += 1.0 - math.exp(-alpha * arg) / counts[ids[i]] ** lam
        return total / len(src)

    return 0.5 * (one_direction(a, b) + one_direction(b, a))


def dcd_unequal_brute(
    a: np.ndarray,
    b: np.ndarray,
    alpha: float,
    lam: float = 1.0,
    squared: bool = True,
    variant: str = "e",
) -> float:
    """Unequal-size density-aware distance (a is the larger set)."""
    assert len(a) >= len(b)
    eta = len(a) / len(b)
    ids_ab, d_ab = nn_ids_dists(a, b)
    ids_ba, d_ba = nn_ids_dists(b, a)
    counts_b = query_counts_brute(a, b)
    counts_a = query_counts_brute(b, a)

    def earg(d):
        return d * d if squared else d

    t1 = 0.0
    for i in range(len(a)):
        n_lam = counts_b[ids_ab[i]] ** lam
        e = math.exp(-alpha * earg(d_ab[i]))
        if variant == "naive":
            t1 += 1.0 - e * eta / n_lam
        else:
            t1 += 1.0 - e / max(n_lam / eta, 1.0)
    t1 /= len(a)

    t2 = 0.0
    eta_bar = math.ceil(eta)
    for j in range(len(b)):
        n_lam = counts_a[ids_ba[j]] ** lam
        if variant == "naive":
            e = math.exp(-alpha * earg(d_ba[j]))
            t2 += 1.0 - e / (eta * n_lam)
        else:
            nbr_ids, nbr_d = brute_knn(a, b[j], eta_bar)
            s = sum(math.exp(-alpha * earg(dd)) for dd in nbr_d)
            t2 += 1.0 - s / (eta_bar * n_lam)
    t2 /= len(b)
    return 0.5 * (t1 + t2)


def emd_enumerate(a: np.ndarray, b: np.ndarray) -> float:
    """Minimal bijection cost by trying every permutation (n <= 9)."""
    n = len(a)
    D = dist_matrix(a, b)
    perms = np.array(list(itertools.permutations(range(n))))
    costs = D[np.arange(n)[None, :], perms].sum(axis=1)
    return float(costs.min())
