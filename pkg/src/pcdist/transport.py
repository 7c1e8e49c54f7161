"""Earth Mover's Distance solvers.

``emd_exact`` is a cubic-time shortest-augmenting-path assignment solver and
serves as the oracle for small instances.  ``emd_approx`` is a forward
auction with epsilon scaling: bidders (source points) compete for items
(target points) by raising prices in increments of at least the current
epsilon, which yields an assignment whose cost exceeds the optimum by at
most ``n * eps`` once the final scaling phase completes.  Both solvers are
deterministic: fixed processing order, first-occurrence argmin, lowest
bidder index wins price ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud, as_cloud
from .errors import CardinalityMismatchError, SizeLimitExceededError

__all__ = ["AssignmentResult", "emd_exact", "emd_approx", "emd_value"]

#: Guard for the exact solver; it is O(n^3).
EXACT_SIZE_LIMIT = 512


@dataclass(frozen=True)
class AssignmentResult:
    """A one-to-one matching between two equal-size clouds.

    ``mapping[i]`` is the target index assigned to source point ``i`` and is
    always a true bijection, even when the approximate solver is cut off
    (``converged`` False).  ``approx_error`` is a duality-gap-based upper
    bound on the relative cost excess (0 for the exact solver).
    """

    mapping: np.ndarray
    total_cost: float
    iterations: int
    approx_error: float = 0.0
    converged: bool = True


def _check_pair(s1: PointCloud, s2: PointCloud):
    if s1.size != s2.size:
        raise CardinalityMismatchError(
            f"EMD requires equal point counts, got {s1.size} and {s2.size}"
        )


def _dist_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    g = a @ b.T
    d2 = (
        np.einsum("ij,ij->i", a, a)[:, None]
        + np.einsum("ij,ij->i", b, b)[None, :]
        - 2.0 * g
    )
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2, out=d2)


def _mapping_cost(a: np.ndarray, b: np.ndarray, mapping: np.ndarray) -> float:
    diff = a - b[mapping]
    return float(np.sqrt(np.einsum("ij,ij->i", diff, diff)).sum())


def _lapjv(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shortest-augmenting-path optimal assignment (Jonker-Volgenant).

    Returns (col4row, u, v): the optimal column per row and the dual
    potentials.  Deterministic via first-occurrence argmin.
    """
    n = cost.shape[0]
    u = np.zeros(n)
    v = np.zeros(n)
    col4row = np.full(n, -1, dtype=np.int64)
    row4col = np.full(n, -1, dtype=np.int64)
    for cur_row in range(n):
        min_val = 0.0
        i = cur_row
        remaining = np.arange(n)
        num_remaining = n
        shortest = np.full(n, np.inf)
        pred = np.full(n, cur_row, dtype=np.int64)
        done = np.zeros(n, dtype=bool)
        sink = -1
        while sink == -1:
            rem = remaining[:num_remaining]
            r = min_val + cost[i, rem] - u[i] - v[rem]
            better = r < shortest[rem]
            if better.any():
                upd = rem[better]
                shortest[upd] = r[better]
                pred[upd] = i
            k = int(np.argmin(shortest[rem]))
            j = int(rem[k])
            min_val = shortest[j]
            done[j] = True
            if row4col[j] == -1:
                sink = j
            else:
                i = int(row4col[j])
            num_remaining -= 1
            remaining[k] = remaining[num_remaining]
        # Dual update keeps reduced costs non-negative.
        done[sink] = False
        js = np.nonzero(done)[0]
        delta = min_val - shortest[js]
        u[row4col[js]] += delta
        v[js] -= delta
        u[cur_row] += min_val
        # Augment along the predecessor chain.
        j = sink
        while True:
            i = int(pred[j])
            row4col[j] = i
            col4row[i], j = j, col4row[i]
            if i == cur_row:
                break
    return col4row, u, v


def emd_exact(s1, s2) -> AssignmentResult:
    """Optimal bijection minimising the summed Euclidean pair distances.

    Limited to ``EXACT_SIZE_LIMIT`` points per cloud; the globally minimal
    total cost is attained exactly (up to float summation).
    """
    s1, s2 = as_cloud(s1), as_cloud(s2)
    _check_pair(s1, s2)
    n = s1.size
    if n > EXACT_SIZE_LIMIT:
        raise SizeLimitExceededError(
            f"exact EMD is limited to {EXACT_SIZE_LIMIT} points, got {n}"
        )
    cost = _dist_matrix(s1.points, s2.points)
    mapping, _, _ = _lapjv(cost)
    return AssignmentResult(
        mapping=mapping,
        total_cost=_mapping_cost(s1.points, s2.points, mapping),
        iterations=n,
        approx_error=0.0,
        converged=True,
    )


def _auction_rounds(A, p, owner, assigned_to, eps, rounds_left):
    """Run Jacobi bidding rounds at a fixed epsilon until complete or cut off.

    Mutates prices and assignment arrays in place; returns rounds used.
    """
    n = A.shape[0]
    used = 0
    while used < rounds_left:
        unassigned = np.nonzero(assigned_to < 0)[0]
        if unassigned.size == 0:
            break
        used += 1
        V = A[unassigned] - p[None, :]
        jstar = np.argmax(V, axis=1)
        rows = np.arange(unassigned.size)
        v1 = V[rows, jstar]
        V[rows, jstar] = -np.inf
        v2 = V.max(axis=1)
        bids = p[jstar] + (v1 - v2) + eps
        # Highest bid wins each item; ties go to the lowest bidder index.
        order = np.lexsort((rows, -bids, jstar))
        firsts = order[np.unique(jstar[order], return_index=True)[1]]
        win_items = jstar[firsts]
        win_bidders = unassigned[firsts]
        evicted = owner[win_items]
        assigned_to[evicted[evicted >= 0]] = -1
        owner[win_items] = win_bidders
        assigned_to[win_bidders] = win_items
        p[win_items] = bids[firsts]
    return used


def emd_approx(s1, s2, eps: float = 0.004, max_iters: int = 3000) -> AssignmentResult:
    """Auction assignment with epsilon scaling.

    ``eps`` is the final per-point price slack: the returned cost is within
    ``n * eps`` of optimal in theory and usually far closer in practice.
    If ``max_iters`` bidding rounds are exhausted first, the remaining
    points are matched greedily and the result is flagged ``converged=False``.
    """
    s1, s2 = as_cloud(s1), as_cloud(s2)
    _check_pair(s1, s2)
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    a, b = s1.points, s2.points
    n = s1.size
    if n == 1:
        mapping = np.zeros(1, dtype=np.int64)
        return AssignmentResult(mapping, _mapping_cost(a, b, mapping), 0)

    D = _dist_matrix(a, b)
    A = -D
    p = np.zeros(n)
    owner = np.full(n, -1, dtype=np.int64)
    assigned_to = np.full(n, -1, dtype=np.int64)

    # Warm start: mutually nearest pairs satisfy epsilon-CS at zero prices.
    nn12 = np.argmin(D, axis=1)
    nn21 = np.argmin(D, axis=0)
    mutual = np.nonzero(nn21[nn12] == np.arange(n))[0]
    items = nn12[mutual]  # distinct: at most one mutual partner per item
    owner[items] = mutual
    assigned_to[mutual] = items

    d_max = float(D.max())
    scale = 5.0
    phases = [eps]
    cur = d_max / 4.0
    while cur > eps:
        phases.append(cur)
        cur /= scale
    phases.reverse()

    iterations = 0
    for phase_eps in phases:
        if iterations >= max_iters:
            break
        # Drop assignments that violate epsilon-CS at the new epsilon.
        held = np.nonzero(assigned_to >= 0)[0]
        if held.size:
            slack = (A[held] - p[None, :]).max(axis=1) - (
                A[held, assigned_to[held]] - p[assigned_to[held]]
            )
            drop = held[slack > phase_eps]
            owner[assigned_to[drop]] = -1
            assigned_to[drop] = -1
        iterations += _auction_rounds(
            A, p, owner, assigned_to, phase_eps, max_iters - iterations
        )

    converged = bool((assigned_to >= 0).all())
    if not converged:
        free_items = np.nonzero(owner < 0)[0]
        for i in np.nonzero(assigned_to < 0)[0]:
            k = int(np.argmin(D[i, free_items]))
            j = int(free_items[k])
            owner[j] = i
            assigned_to[i] = j
            free_items = np.delete(free_items, k)

    mapping = assigned_to.copy()
    total = _mapping_cost(a, b, mapping)
    # Duality gap: any price vector bounds the optimum from below.
    profits = (A - p[None, :]).max(axis=1)
    lower_bound = -(profits.sum() + p.sum())
    gap = max(total - lower_bound, 0.0)
    approx_error = gap / total if total > 0 else 0.0
    return AssignmentResult(
        mapping=mapping,
        total_cost=total,
        iterations=iterations,
        approx_error=approx_error,
        converged=converged,
    )


def emd_value(result: AssignmentResult, normalize: str = "mean") -> float:
    """Scalar EMD from an assignment: the raw cost sum or its per-point mean."""
    if normalize == "sum":
        return result.total_cost
    if normalize == "mean":
        return result.total_cost / len(result.mapping)
    raise ValueError(f"normalize must be 'sum' or 'mean', got {normalize!r}")
