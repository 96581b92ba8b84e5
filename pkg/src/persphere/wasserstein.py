"""Matching metrics between persistence diagrams.

L1- and L2-Wasserstein distances with diagonal augmentation, solved exactly
by the Hungarian algorithm on a square cost matrix; an exhaustive oracle
for small instances; and the matched-interpolation geodesic whose midpoint
is the two-diagram mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from .persistence import PersistenceDiagram

# Marker for "matched to the diagonal" in Matching.pairs.
DIAGONAL = None

BRUTE_FORCE_LIMIT = 8


@dataclass
class Matching:
    """Optimal pairing underlying a Wasserstein distance.

    `pairs` holds (index in X, index in Y) with None marking a diagonal
    partner; every off-diagonal point of each diagram appears exactly once.
    `cost` is the reported distance (for q=2, the square root of the summed
    squared ground costs).
    """

    pairs: list[tuple[int | None, int | None]]
    cost: float


def _diagonal_gap(points: np.ndarray) -> np.ndarray:
    # death - birth: the L1 distance to the diagonal, and sqrt(2) times the
    # L2 (orthogonal projection) distance.
    return points[:, 1] - points[:, 0]


def _ground_costs(px: np.ndarray, py: np.ndarray, q: int) -> np.ndarray:
    diff = np.abs(px[:, None, :] - py[None, :, :])
    if q == 1:
        return diff.sum(axis=-1)
    return (diff * diff).sum(axis=-1)


def _assignment_costs(px: np.ndarray, py: np.ndarray, q: int):
    """Point-to-point, X-to-diagonal, and Y-to-diagonal assignment costs.

    For q=2 these are squared distances (the final value takes a square
    root); for q=1 they are plain L1 distances.
    """
    cross = _ground_costs(px, py, q)
    gap_x = _diagonal_gap(px)
    gap_y = _diagonal_gap(py)
    if q == 1:
        diag_x, diag_y = gap_x, gap_y
    else:
        diag_x, diag_y = gap_x * gap_x / 2.0, gap_y * gap_y / 2.0
    return cross, diag_x, diag_y


def _solve_assignment(cost: np.ndarray):
    """Exact minimum-cost perfect matching of a square matrix, O(n^3).

    Hungarian algorithm with row/column potentials and shortest augmenting
    paths. Returns (row_for_col, total_cost) with 0-based indices.
    """
    c = np.asarray(cost, dtype=float)
    n = c.shape[0]
    if n == 0:
        return np.empty(0, dtype=int), 0.0
    rows = c.tolist()
    inf = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match = [0] * (n + 1)  # col (1-based) -> row (1-based, 0 = free)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            row = rows[i0 - 1]
            shift = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - shift - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j_prev = way[j0]
            match[j0] = match[j_prev]
            j0 = j_prev
    row_for_col = np.asarray(match[1:], dtype=int) - 1
    total = float(c[row_for_col, np.arange(n)].sum())
    return row_for_col, total


def wasserstein(x: PersistenceDiagram, y: PersistenceDiagram, q: int = 2):
    """
    Lq-Wasserstein distance between two finite diagrams.

    Every point matches a point of the other diagram or its own orthogonal
    diagonal projection; diagonal-to-diagonal matches cost nothing. For
    q=2 the distance is the square root of the minimal summed squared
    ground costs; for q=1 it is the minimal summed L1 ground costs.

    Returns
    -------
    (distance, matching) : tuple of float and Matching
    """
    if q not in (1, 2):
        raise ValueError(f"q must be 1 or 2, got {q}")
    px, py = x.pairs, y.pairs
    nx, ny = px.shape[0], py.shape[0]
    if nx == 0 and ny == 0:
        return 0.0, Matching(pairs=[], cost=0.0)

    cross, diag_x, diag_y = _assignment_costs(px, py, q)
    size = nx + ny
    big = float(cross.sum() + diag_x.sum() + diag_y.sum()) + 1.0
    cost = np.full((size, size), big)
    cost[:nx, :ny] = cross
    # X point i may pair with its own diagonal slot (column ny + i);
    # row nx + j is the diagonal partner that absorbs Y point j.
    cost[np.arange(nx), ny + np.arange(nx)] = diag_x
    cost[nx + np.arange(ny), np.arange(ny)] = diag_y
    cost[nx:, ny:] = 0.0

    row_for_col, _ = _solve_assignment(cost)
    col_for_row = np.empty(size, dtype=int)
    col_for_row[row_for_col] = np.arange(size)

    pairs: list[tuple[int | None, int | None]] = []
    total = 0.0
    for i in range(nx):
        j = int(col_for_row[i])
        if j < ny:
            pairs.append((i, j))
            total += float(cross[i, j])
        else:
            pairs.append((i, DIAGONAL))
            total += float(diag_x[i])
    for j in range(ny):
        i = int(row_for_col[j])
        if i >= nx:
            pairs.append((DIAGONAL, j))
            total += float(diag_y[j])
    dist = total if q == 1 else float(np.sqrt(total))
    return dist, Matching(pairs=pairs, cost=dist)


def brute_force(x: PersistenceDiagram, y: PersistenceDiagram, q: int = 2) -> float:
    """
    Exhaustive minimum over all matchings, for |X| + |Y| <= 8.

    Every subset of X is matched bijectively to a same-size subset of Y in
    every order; unmatched points pay their diagonal cost.
    """
    if q not in (1, 2):
        raise ValueError(f"q must be 1 or 2, got {q}")
    px, py = x.pairs, y.pairs
    nx, ny = px.shape[0], py.shape[0]
    if nx + ny > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"brute force is limited to {BRUTE_FORCE_LIMIT} total points, "
            f"got {nx + ny}"
        )
    cross, diag_x, diag_y = _assignment_costs(px, py, q)
    all_diag = float(diag_x.sum() + diag_y.sum())
    best = all_diag
    for k in range(1, min(nx, ny) + 1):
        for xs in combinations(range(nx), k):
            base = all_diag - float(diag_x[list(xs)].sum())
            for ys in permutations(range(ny), k):
                total = base - float(diag_y[list(ys)].sum())
                for xi, yj in zip(xs, ys):
                    total += float(cross[xi, yj])
                if total < best:
                    best = total
    return best if q == 1 else float(np.sqrt(best))


def alexandrov_geodesic(
    x: PersistenceDiagram, y: PersistenceDiagram, s: float
) -> PersistenceDiagram:
    """
    Diagram at fraction `s` along the matched-interpolation geodesic.

    Under the optimal L2 matching, each matched pair moves linearly from
    its X position to its Y position; points matched to the diagonal move
    to or from their orthogonal projection. Interpolants landing on the
    diagonal are dropped. The midpoint s=0.5 is the two-diagram mean.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"geodesic parameter must be in [0, 1], got {s}")
    if x.homology_dim != y.homology_dim:
        raise ValueError("diagrams have different homology dimensions")
    _, matching = wasserstein(x, y, q=2)
    out = []
    for i, j in matching.pairs:
        if i is not None:
            a = x.pairs[i]
            b = y.pairs[j] if j is not None else np.full(2, a.mean())
        else:
            b = y.pairs[j]
            a = np.full(2, b.mean())
        p = (1.0 - s) * a + s * b
        if p[1] > p[0]:
            out.append(p)
    pairs = np.asarray(out, dtype=float) if out else np.empty((0, 2))
    return PersistenceDiagram(x.homology_dim, pairs, np.empty(0))
