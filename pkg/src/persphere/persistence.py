"""Vietoris-Rips persistence of point clouds.

Builds filtrations up to triangles (optionally with temporal one-skeleton
links), computes H0/H1 diagrams by boundary-matrix column reduction over
Z/2, provides a union-find fast path for H0, and rescales diagrams to the
unit square.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError


class FiltrationError(ValueError):
    """Raised when a filtration violates the face-ordering contract."""


@dataclass
class Filtration:
    """Simplices as (vertex tuple, birth), sorted by (birth, dim, vertices).

    Vertex tuples are strictly increasing; a simplex with k+1 vertices is a
    k-simplex. Every face must appear before its cofaces and be born no
    later than them.
    """

    simplices: list[tuple[tuple[int, ...], float]]

    def validate(self) -> None:
        """Raise FiltrationError if ordering, faces, or births are malformed."""
        position: dict[tuple[int, ...], int] = {}
        prev_key = None
        for idx, (verts, birth) in enumerate(self.simplices):
            if len(verts) < 1 or len(verts) > 3:
                raise FiltrationError(f"simplex {verts} has unsupported dimension")
            if any(verts[i] >= verts[i + 1] for i in range(len(verts) - 1)):
                raise FiltrationError(f"simplex {verts} is not strictly increasing")
            if not np.isfinite(birth) or birth < 0:
                raise FiltrationError(f"simplex {verts} has invalid birth {birth}")
            key = (birth, len(verts), verts)
            if prev_key is not None and key < prev_key:
                raise FiltrationError(f"simplices out of order at index {idx}")
            prev_key = key
            for face in _faces(verts):
                fpos = position.get(face)
                if fpos is None:
                    raise FiltrationError(f"face {face} of {verts} is missing")
                if self.simplices[fpos][1] > birth:
                    raise FiltrationError(
                        f"face {face} born after its coface {verts}"
                    )
            if verts in position:
                raise FiltrationError(f"duplicate simplex {verts}")
            position[verts] = idx


@dataclass
class PersistenceDiagram:
    """Multiset of finite (birth, death) pairs plus essential births.

    `pairs` has shape (n, 2) with death > birth >= 0; `essential` holds the
    births of classes that never die within the filtration.
    """

    homology_dim: int
    pairs: np.ndarray
    essential: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=float).reshape(-1, 2)
        self.essential = np.asarray(self.essential, dtype=float).reshape(-1)
        if self.homology_dim not in (0, 1):
            raise ValueError(f"homology dimension must be 0 or 1, got {self.homology_dim}")
        if not np.all(np.isfinite(self.pairs)):
            raise ValueError("diagram pairs must be finite")
        if not np.all(np.isfinite(self.essential)):
            raise ValueError("essential births must be finite")
        if np.any(self.pairs < 0) or np.any(self.essential < 0):
            raise ValueError("birth/death values must be nonnegative")
        if self.pairs.size and not np.all(self.pairs[:, 1] > self.pairs[:, 0]):
            raise ValueError("every finite pair must satisfy death > birth")

    def max_finite(self) -> float:
        """Largest finite coordinate (0.0 for an empty diagram)."""
        top = 0.0
        if self.pairs.size:
            top = max(top, float(self.pairs.max()))
        if self.essential.size:
            top = max(top, float(self.essential.max()))
        return top

    def sorted_pairs(self) -> np.ndarray:
        """Pairs in lexicographic order, for multiset comparisons."""
        if not self.pairs.size:
            return self.pairs.reshape(0, 2)
        order = np.lexsort((self.pairs[:, 1], self.pairs[:, 0]))
        return self.pairs[order]


def _faces(verts: tuple[int, ...]):
    if len(verts) == 2:
        return ((verts[0],), (verts[1],))
    if len(verts) == 3:
        i, j, k = verts
        return ((i, j), (i, k), (j, k))
    return ()


def _as_cloud(cloud) -> np.ndarray:
    pts = np.asarray(cloud, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("point cloud must be a non-empty 2-D array")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point cloud contains non-finite coordinates")
    return pts


def _distance_matrix(pts: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def cloud_diameter(cloud) -> float:
    """Largest pairwise distance in the cloud."""
    pts = _as_cloud(cloud)
    return float(_distance_matrix(pts).max())


def build_rips(cloud, max_scale: float, temporal_links: bool = False) -> Filtration:
    """
    Build the Vietoris-Rips filtration of a cloud up to triangles.

    Vertices are born at 0; an edge is born at the pairwise distance when
    that distance is <= max_scale; a triangle is born at the largest birth
    of its three edges and requires all of them. With `temporal_links`,
    edges between consecutive points (by row order) are inserted with
    birth 0 regardless of distance.

    Parameters
    ----------
    cloud : array-like, shape (n, m)
        Point coordinates; rows keep their temporal order.
    max_scale : float
        Largest edge length admitted into the filtration, > 0.
    temporal_links : bool
        Insert zero-birth edges between consecutive rows.
    """
    pts = _as_cloud(cloud)
    if not np.isfinite(max_scale) or max_scale <= 0:
        raise ValueError(f"max_scale must be positive and finite, got {max_scale}")
    n = pts.shape[0]
    dist = _distance_matrix(pts)

    adj = dist <= max_scale
    np.fill_diagonal(adj, False)
    births = dist.copy()
    if temporal_links and n > 1:
        steps = np.arange(n - 1)
        adj[steps, steps + 1] = True
        adj[steps + 1, steps] = True
        births[steps, steps + 1] = 0.0
        births[steps + 1, steps] = 0.0

    simplices: list[tuple[tuple[int, ...], float]] = [((i,), 0.0) for i in range(n)]
    edge_i, edge_j = np.nonzero(np.triu(adj, 1))
    for i, j in zip(edge_i.tolist(), edge_j.tolist()):
        simplices.append(((i, j), float(births[i, j])))
        ks = np.nonzero(adj[i] & adj[j])[0]
        ks = ks[ks > j]
        if ks.size:
            tri_birth = np.maximum(births[i, j], np.maximum(births[i, ks], births[j, ks]))
            for k, b in zip(ks.tolist(), tri_birth.tolist()):
                simplices.append(((i, j, k), float(b)))

    simplices.sort(key=lambda s: (s[1], len(s[0]), s[0]))
    return Filtration(simplices)


def _reduce_block(columns, births):
    """
    Reduce one dimension block of the boundary matrix over Z/2.

    `columns` yields integer bitsets over rank-numbered rows of the
    previous dimension, in filtration order. Returns (pairs, creators):
    `pairs` maps pivot row -> birth of the destroying column; `creators`
    flags columns that reduced to zero.
    """
    pivot: dict[int, int] = {}
    pairs: dict[int, float] = {}
    creators = []
    pivot_get = pivot.get
    for col, birth in zip(columns, births):
        while col:
            low = col.bit_length() - 1
            held = pivot_get(low)
            if held is None:
                pivot[low] = col
                pairs[low] = birth
                break
            col ^= held
        creators.append(col == 0)
    return pairs, creators


def compute_persistence(filtration: Filtration) -> tuple[PersistenceDiagram, PersistenceDiagram]:
    """
    Standard Z/2 boundary-matrix reduction of a filtration.

    Returns the H0 and H1 diagrams. Zero-persistence pairs are discarded;
    classes that never die are reported as essential births. Ordering,
    missing-face, and birth-monotonicity violations raise FiltrationError.

    Columns of different dimensions never interact in the reduction, so
    the edge block (vertex rows, H0) and the triangle block (edge rows,
    H1) are processed independently with per-dimension row numbering;
    this is the textbook algorithm, with columns materialized lazily.
    """
    by_dim: tuple[list, list, list] = ([], [], [])
    births: tuple[list[float], ...] = ([], [], [])
    rank: dict[tuple[int, ...], int] = {}
    prev_key = None
    for verts, birth in filtration.simplices:
        d = len(verts) - 1
        if not 0 <= d <= 2:
            raise FiltrationError(f"simplex {verts} has unsupported dimension")
        key = (birth, d + 1, verts)
        if prev_key is not None and key < prev_key:
            raise FiltrationError(f"simplices out of order at {verts}")
        prev_key = key
        for face in _faces(verts):
            fpos = rank.get(face)
            if fpos is None:
                raise FiltrationError(f"face {face} of {verts} is missing")
            if births[d - 1][fpos] > birth:
                raise FiltrationError(f"face {face} born after its coface {verts}")
        if d < 2:
            if verts in rank:
                raise FiltrationError(f"duplicate simplex {verts}")
            rank[verts] = len(by_dim[d])
        by_dim[d].append(verts)
        births[d].append(birth)

    def edge_columns():
        for verts in by_dim[1]:
            yield (1 << rank[(verts[0],)]) | (1 << rank[(verts[1],)])

    def triangle_columns():
        for i, j, k in by_dim[2]:
            yield (1 << rank[(i, j)]) | (1 << rank[(i, k)]) | (1 << rank[(j, k)])

    pairs0, edge_creator = _reduce_block(edge_columns(), births[1])
    pairs1, _ = _reduce_block(triangle_columns(), births[2])

    h0_pairs, h0_ess = [], []
    for v_rank, vbirth in enumerate(births[0]):
        death = pairs0.get(v_rank)
        if death is None:
            h0_ess.append(vbirth)
        elif death > vbirth:
            h0_pairs.append((vbirth, death))

    h1_pairs, h1_ess = [], []
    for e_rank, is_creator in enumerate(edge_creator):
        if not is_creator:
            continue
        ebirth = births[1][e_rank]
        death = pairs1.get(e_rank)
        if death is None:
            h1_ess.append(ebirth)
        elif death > ebirth:
            h1_pairs.append((ebirth, death))

    pd0 = PersistenceDiagram(0, np.asarray(h0_pairs, dtype=float), np.asarray(h0_ess))
    pd1 = PersistenceDiagram(1, np.asarray(h1_pairs, dtype=float), np.asarray(h1_ess))
    return pd0, pd1


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def h0_unionfind(cloud, temporal_links: bool = False) -> PersistenceDiagram:
    """
    H0 diagram via Kruskal-style union-find over all pairwise edges.

    Each merge at distance w > 0 yields a pair (0, w); zero-length merges
    (duplicate points or temporal links) have zero persistence and are
    dropped. All merges are realized, which matches a filtration whose
    scale is at least the cloud diameter. One essential bar born at 0
    remains for the surviving component.
    """
    pts = _as_cloud(cloud)
    n = pts.shape[0]
    dist = _distance_matrix(pts)
    iu, ju = np.triu_indices(n, 1)
    weights = dist[iu, ju]
    if temporal_links and n > 1:
        temporal = (ju - iu) == 1
        weights = weights.copy()
        weights[temporal] = 0.0
    order = np.argsort(weights, kind="stable")
    uf = _UnionFind(n)
    deaths = []
    for e in order.tolist():
        if uf.union(int(iu[e]), int(ju[e])):
            w = float(weights[e])
            if w > 0:
                deaths.append(w)
    pairs = np.column_stack([np.zeros(len(deaths)), np.asarray(deaths)]) if deaths else np.empty((0, 2))
    return PersistenceDiagram(0, pairs, np.asarray([0.0]))


def normalize_diagram(pd: PersistenceDiagram, scale: float) -> PersistenceDiagram:
    """
    Divide all coordinates by `scale` and cap essential bars at death 1.

    `scale` must be positive and at least the largest finite coordinate,
    so that the result lives in the unit square. Essential bars become
    finite pairs (birth / scale, 1.0); pairs left with zero persistence
    by the cap are dropped.
    """
    if not np.isfinite(scale) or scale <= 0:
        raise ValueError(f"normalization scale must be positive, got {scale}")
    top = pd.max_finite()
    if top > scale:
        raise ValueError(
            f"normalization scale {scale} is smaller than coordinate {top}"
        )
    pairs = pd.pairs / scale if pd.pairs.size else pd.pairs.reshape(0, 2)
    if pd.essential.size:
        capped = np.column_stack([pd.essential / scale, np.ones(pd.essential.size)])
        capped = capped[capped[:, 1] > capped[:, 0]]
        pairs = np.vstack([pairs, capped]) if pairs.size else capped
    return PersistenceDiagram(pd.homology_dim, pairs, np.empty(0))


def diagram_of_cloud(
    cloud, max_scale: float | None = None, temporal_links: bool = False
) -> tuple[PersistenceDiagram, PersistenceDiagram]:
    """
    Convenience pipeline: Rips filtration of the cloud, then its H0/H1.

    When `max_scale` is omitted the cloud diameter is used, which makes
    every H0 merge and every H1 death visible (at full scale the complex
    contains all edges and triangles).
    """
    pts = _as_cloud(cloud)
    if max_scale is None:
        max_scale = cloud_diameter(pts)
        if max_scale <= 0:
            max_scale = 1.0
    return compute_persistence(build_rips(pts, max_scale, temporal_links))


def write_diagrams(path, diagrams) -> None:
    """Write diagrams as CSV with header dim,birth,death; essential bars get death=inf."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("dim,birth,death\n")
        for pd in diagrams:
            for birth, death in pd.pairs:
                fh.write(f"{pd.homology_dim},{birth:.17g},{death:.17g}\n")
            for birth in pd.essential:
                fh.write(f"{pd.homology_dim},{birth:.17g},inf\n")


def read_diagrams(path) -> dict[int, PersistenceDiagram]:
    """Read a diagram CSV; returns one diagram per homology dimension present."""
    pairs: dict[int, list] = {}
    essential: dict[int, list] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "dim,birth,death":
            raise ParseError(f"{path}: expected header 'dim,birth,death', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 columns")
            try:
                dim = int(fields[0])
                birth = float(fields[1])
                death = float(fields[2])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad row {line!r}") from exc
            if np.isinf(death):
                essential.setdefault(dim, []).append(birth)
            else:
                pairs.setdefault(dim, []).append((birth, death))
    out = {}
    for dim in sorted(set(pairs) | set(essential)):
        try:
            out[dim] = PersistenceDiagram(
                dim,
                np.asarray(pairs.get(dim, []), dtype=float),
                np.asarray(essential.get(dim, []), dtype=float),
            )
        except ValueError as exc:
            raise ParseError(f"{path}: invalid diagram for dim {dim}: {exc}") from exc
    return out


def read_diagram(path, dim: int) -> PersistenceDiagram:
    """Read one homology dimension from a diagram CSV (empty diagram if absent)."""
    diagrams = read_diagrams(path)
    if dim in diagrams:
        return diagrams[dim]
    return PersistenceDiagram(dim, np.empty((0, 2)), np.empty(0))
