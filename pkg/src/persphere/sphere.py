"""Geometry of unit-norm square-root grids: metric, maps, means, and PGA.

All grids share the discrete inner product sum(a * b) / K^2, matching the
density module, so unit norm here means the same thing there. Distances are
arc lengths on the unit sphere of that inner product; nonnegative unit
grids keep them in [0, pi/2].
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .density import SqrtDensity, read_grid, write_grid

TANGENCY_TOL = 1e-8
ORTHONORMAL_TOL = 1e-8
CLAMP_DIAGNOSTIC = 1e-12


def inner(a, b) -> float:
    """Discrete inner product sum(a * b) / K^2 of two K x K grids."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"grid shapes differ: {a.shape} vs {b.shape}")
    return float((a * b).sum()) / a.size


def grid_norm(values) -> float:
    """Norm induced by the discrete inner product."""
    v = np.asarray(values, dtype=float)
    return float(np.sqrt((v * v).sum() / v.size))


def _clipped_cosine(p1: SqrtDensity, p2: SqrtDensity) -> float:
    c = inner(p1.grid, p2.grid)
    if abs(c) > 1.0 + CLAMP_DIAGNOSTIC:
        warnings.warn(
            f"inner product {c} exceeds 1 by more than {CLAMP_DIAGNOSTIC}; "
            "inputs may not be unit densities",
            RuntimeWarning,
            stacklevel=3,
        )
    return min(1.0, max(-1.0, c))


def distance(p1: SqrtDensity, p2: SqrtDensity) -> float:
    """Arc-length distance arccos of the inner product, in [0, pi/2]."""
    return float(np.arccos(_clipped_cosine(p1, p2)))


@dataclass
class TangentVector:
    """A K x K direction orthogonal to its base density."""

    base: SqrtDensity
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.base.grid.shape:
            raise ValueError(
                f"tangent shape {self.values.shape} does not match base "
                f"{self.base.grid.shape}"
            )
        if abs(inner(self.base.grid, self.values)) > TANGENCY_TOL:
            raise ValueError("values are not tangent to the base density")

    @property
    def norm(self) -> float:
        return grid_norm(self.values)

    def scaled(self, s: float) -> "TangentVector":
        return TangentVector(self.base, self.values * s)


def zero_tangent(psi: SqrtDensity) -> TangentVector:
    return TangentVector(psi, np.zeros_like(psi.grid))


def _same_base(psi: SqrtDensity, v: TangentVector) -> bool:
    return v.base is psi or np.array_equal(v.base.grid, psi.grid)


def exp_map(psi: SqrtDensity, v: TangentVector) -> SqrtDensity:
    """
    Follow the great circle from `psi` along `v` for arc length |v|.

    cos(|v|) psi + sin(|v|) v / |v|, renormalized to unit norm. Cells pushed
    negative are clamped to 0; the removed squared mass is reported on the
    result as `clamp_mass`. A zero vector returns `psi` unchanged.
    """
    if not _same_base(psi, v):
        raise ValueError("tangent vector is based at a different density")
    length = v.norm
    if length == 0.0:
        return psi
    if length >= np.pi:
        raise ValueError(f"tangent norm {length} is outside the injectivity radius pi")
    out = np.cos(length) * psi.grid + np.sin(length) * (v.values / length)
    negative = out < 0
    clamp_mass = 0.0
    if negative.any():
        clamp_mass = float((out[negative] ** 2).sum()) / out.size
        out = np.where(negative, 0.0, out)
    out = out / grid_norm(out)
    return SqrtDensity(grid=out, clamp_mass=clamp_mass)


def log_map(psi_i: SqrtDensity, psi_j: SqrtDensity) -> TangentVector:
    """
    Tangent vector at `psi_i` whose exponential reaches `psi_j`.

    The direction is psi_j minus its component along psi_i, rescaled to
    norm arccos of the inner product, so |log| equals the arc distance and
    exp_map(psi_i, log_map(psi_i, psi_j)) recovers psi_j. Identical inputs
    give the zero vector; orthogonal inputs sit on the injectivity
    boundary and are flagged with a warning.
    """
    if np.array_equal(psi_i.grid, psi_j.grid):
        return zero_tangent(psi_i)
    c = _clipped_cosine(psi_i, psi_j)
    if c <= CLAMP_DIAGNOSTIC:
        warnings.warn(
            "densities are orthogonal; log direction is the projection boundary case",
            RuntimeWarning,
            stacklevel=2,
        )
    u = psi_j.grid - c * psi_i.grid
    u_norm = grid_norm(u)
    if u_norm == 0.0:
        return zero_tangent(psi_i)
    theta = float(np.arccos(c))
    return TangentVector(psi_i, u * (theta / u_norm))


def geodesic(p1: SqrtDensity, p2: SqrtDensity, s: float) -> SqrtDensity:
    """Point at fraction `s` in [0, 1] along the arc from p1 to p2."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"geodesic parameter must be in [0, 1], got {s}")
    return exp_map(p1, log_map(p1, p2).scaled(s))


def extrinsic_mean(densities) -> SqrtDensity:
    """Cellwise average of the set, rescaled back onto the unit sphere."""
    densities = list(densities)
    if not densities:
        raise ValueError("cannot average an empty set of densities")
    k = densities[0].grid_size
    if any(d.grid_size != k for d in densities):
        raise ValueError("densities have mixed grid resolutions")
    mean = np.mean([d.grid for d in densities], axis=0)
    norm = grid_norm(mean)
    if norm == 0.0:
        raise ValueError("mean grid is zero; cannot project onto the sphere")
    return SqrtDensity(grid=mean / norm)


@dataclass
class PgaModel:
    """Mean density with orthonormal principal tangent directions.

    `variances` are nonincreasing and match `components` in length; every
    component is tangent to `mean` and the components are pairwise
    orthonormal under the discrete inner product.
    """

    mean: SqrtDensity
    components: list[TangentVector]
    variances: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        self.variances = np.asarray(self.variances, dtype=float).reshape(-1)
        if len(self.components) != self.variances.size:
            raise ValueError("component and variance counts differ")
        if np.any(self.variances < 0):
            raise ValueError("variances must be nonnegative")
        if np.any(np.diff(self.variances) > 0):
            raise ValueError("variances must be nonincreasing")
        for a, comp in enumerate(self.components):
            if not _same_base(self.mean, comp):
                raise ValueError("component is not based at the model mean")
            for b in range(a, len(self.components)):
                got = inner(comp.values, self.components[b].values)
                want = 1.0 if a == b else 0.0
                if abs(got - want) > ORTHONORMAL_TOL:
                    raise ValueError(
                        f"components {a},{b} have inner product {got}, expected {want}"
                    )

    @property
    def n_components(self) -> int:
        return len(self.components)


def _complete_direction(mean: SqrtDensity, taken: list[np.ndarray]) -> np.ndarray:
    # Deterministic unit tangent direction for degenerate (zero-variance)
    # modes: Gram-Schmidt single cell indicators against mean and the
    # directions already chosen.
    k = mean.grid_size
    for flat in range(k * k):
        cand = np.zeros((k, k))
        cand.flat[flat] = 1.0
        cand -= inner(cand, mean.grid) * mean.grid
        for other in taken:
            cand -= inner(cand, other) * other
        norm = grid_norm(cand)
        if norm > 1e-9:
            return cand / norm
    raise ValueError("could not complete an orthonormal tangent direction")


def pga(densities, n_components: int) -> PgaModel:
    """
    Principal geodesic analysis of a set of sqrt-densities.

    Lifts every density to the tangent space at the extrinsic mean and runs
    PCA there: the centered tangent vectors' Gram matrix (sample covariance
    under the discrete inner product) is eigendecomposed, giving orthonormal
    tangent components with nonincreasing variances. Directions beyond the
    data rank get variance 0 and a deterministic orthonormal completion.
    """
    densities = list(densities)
    n = len(densities)
    if n < 2:
        raise ValueError("principal geodesic analysis needs at least 2 densities")
    mean = extrinsic_mean(densities)
    k = mean.grid_size
    if not 1 <= n_components <= min(n - 1, k * k):
        raise ValueError(
            f"n_components must be in [1, {min(n - 1, k * k)}], got {n_components}"
        )
    lifts = np.stack([log_map(mean, d).values for d in densities])
    centered = lifts - lifts.mean(axis=0)
    flat = centered.reshape(n, -1)
    gram = (flat @ flat.T) / (k * k)
    eigvals, eigvecs = np.linalg.eigh(gram / n)
    order = np.argsort(eigvals, kind="stable")[::-1]

    components: list[TangentVector] = []
    taken: list[np.ndarray] = []
    variances = []
    for rank_idx in range(n_components):
        lam = float(eigvals[order[rank_idx]]) if rank_idx < order.size else 0.0
        direction = None
        if lam > 0:
            weights = eigvecs[:, order[rank_idx]]
            combo = np.tensordot(weights, centered, axes=(0, 0))
            norm = grid_norm(combo)
            if norm > 1e-12:
                direction = combo / norm
        if direction is None:
            lam = 0.0
            direction = _complete_direction(mean, taken)
        taken.append(direction)
        variances.append(max(lam, 0.0))
        components.append(TangentVector(mean, direction))
    return PgaModel(mean=mean, components=components, variances=np.asarray(variances))


def project_coords(model: PgaModel, psi: SqrtDensity) -> np.ndarray:
    """Coordinates of a density in the model: projections of its lift."""
    if psi.grid_size != model.mean.grid_size:
        raise ValueError("density resolution does not match the model")
    lift = log_map(model.mean, psi)
    return np.asarray(
        [inner(lift.values, comp.values) for comp in model.components], dtype=float
    )


def save_pga_model(model: PgaModel, directory, metadata: dict | None = None) -> None:
    """Write mean + components as grid CSVs plus a JSON manifest."""
    os.makedirs(directory, exist_ok=True)
    write_grid(os.path.join(directory, "mean.csv"), model.mean.grid)
    for idx, comp in enumerate(model.components):
        write_grid(os.path.join(directory, f"component_{idx:03d}.csv"), comp.values)
    manifest = {
        "grid_size": model.mean.grid_size,
        "n_components": model.n_components,
        "variances": [float(v) for v in model.variances],
    }
    if metadata:
        manifest.update(metadata)
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_pga_model(directory) -> tuple[PgaModel, dict]:
    """Load a model written by save_pga_model; returns (model, manifest)."""
    with open(os.path.join(directory, "manifest.json"), "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    mean = SqrtDensity(grid=read_grid(os.path.join(directory, "mean.csv")))
    components = [
        TangentVector(mean, read_grid(os.path.join(directory, f"component_{idx:03d}.csv")))
        for idx in range(int(manifest["n_components"]))
    ]
    model = PgaModel(
        mean=mean, components=components, variances=np.asarray(manifest["variances"])
    )
    return model, manifest
