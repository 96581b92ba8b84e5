"""Dataset-level tooling: distance matrices, k-NN, PGA features, leave-one-out
regression, timing comparisons, and the synthetic 3-class benchmark."""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from . import sphere
from .density import PersistencePdf, sqrt_transform
from .errors import ParseError
from .persistence import PersistenceDiagram, diagram_of_cloud
from .wasserstein import wasserstein

METRICS = ("hilbert", "w1", "w2")


class ConfigurationError(ValueError):
    """Items cannot be compared under the requested metric."""


@dataclass
class DistanceMatrix:
    """Symmetric pairwise distances with item labels."""

    labels: list[str]
    values: np.ndarray
    metric: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.values.shape[0]
        if self.values.shape != (n, n):
            raise ValueError("distance matrix must be square")
        if len(self.labels) != n:
            raise ValueError("label count does not match matrix size")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not np.array_equal(self.values, self.values.T):
            raise ValueError("distance matrix must be exactly symmetric")
        if np.any(np.diag(self.values) != 0):
            raise ValueError("distance matrix diagonal must be exactly zero")
        if np.any(self.values < 0):
            raise ValueError("distances must be nonnegative")


def _hilbert_matrix(pdfs: list[PersistencePdf]) -> np.ndarray:
    k = pdfs[0].grid_size
    sigma = pdfs[0].sigma
    for p in pdfs[1:]:
        if p.grid_size != k:
            raise ConfigurationError(
                f"mixed grid resolutions: {k} vs {p.grid_size}"
            )
        if p.sigma != sigma:
            raise ConfigurationError(f"mixed bandwidths: {sigma} vs {p.sigma}")
    flat = np.stack([sqrt_transform(p).grid.ravel() for p in pdfs])
    cosines = (flat @ flat.T) / (k * k)
    dist = np.arccos(np.clip(cosines, -1.0, 1.0))
    upper = np.triu(dist, 1)
    return upper + upper.T


def _matching_matrix(diagrams: list[PersistenceDiagram], q: int, jobs: int) -> np.ndarray:
    n = len(diagrams)
    values = np.zeros((n, n))
    index_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def solve(ij):
        i, j = ij
        return i, j, wasserstein(diagrams[i], diagrams[j], q)[0]

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(solve, index_pairs))
    else:
        results = [solve(ij) for ij in index_pairs]
    for i, j, d in results:
        values[i, j] = d
        values[j, i] = d
    return values


def distance_matrix(items, metric: str, labels=None, jobs: int = 1) -> DistanceMatrix:
    """
    All-pairs distances between items.

    For metric 'hilbert', items are PersistencePdf objects sharing grid
    resolution and bandwidth (mixed parameters raise ConfigurationError);
    each is square-root transformed and compared by arc length. For 'w1'
    and 'w2', items are PersistenceDiagram objects. Each pair is computed
    once and mirrored, so the matrix is exactly symmetric with a zero
    diagonal. `jobs` > 1 parallelizes the pair computations.
    """
    items = list(items)
    if len(items) < 2:
        raise ValueError("need at least 2 items for a distance matrix")
    if labels is None:
        labels = [f"item_{i:03d}" for i in range(len(items))]
    labels = [str(b) for b in labels]
    if metric == "hilbert":
        if not all(isinstance(p, PersistencePdf) for p in items):
            raise ConfigurationError("hilbert metric expects PersistencePdf items")
        values = _hilbert_matrix(items)
    elif metric in ("w1", "w2"):
        if not all(isinstance(p, PersistenceDiagram) for p in items):
            raise ConfigurationError(f"{metric} expects PersistenceDiagram items")
        values = _matching_matrix(items, 1 if metric == "w1" else 2, jobs)
    else:
        raise ValueError(f"unknown metric {metric!r}; pick one of {METRICS}")
    return DistanceMatrix(labels=labels, values=values, metric=metric)


def knn_classify(dists, train_labels, k: int = 1) -> list:
    """
    Majority vote over the k nearest training items per row of `dists`.

    `dists` has shape (n_test, n_train). Vote ties break by the smallest
    summed distance within the k nearest, then by label sort order.
    """
    dists = np.asarray(dists, dtype=float)
    if dists.ndim == 1:
        dists = dists.reshape(1, -1)
    train_labels = list(train_labels)
    n_train = dists.shape[1]
    if n_train == 0 or len(train_labels) == 0:
        raise ValueError("training set is empty")
    if len(train_labels) != n_train:
        raise ValueError("label count does not match distance columns")
    if not 1 <= k <= n_train:
        raise ValueError(f"k must be in [1, {n_train}], got {k}")
    predictions = []
    for row in dists:
        nearest = np.argsort(row, kind="stable")[:k]
        votes: dict = {}
        for idx in nearest:
            label = train_labels[idx]
            count, total = votes.get(label, (0, 0.0))
            votes[label] = (count + 1, total + float(row[idx]))
        winner = min(votes, key=lambda lab: (-votes[lab][0], votes[lab][1], str(lab)))
        predictions.append(winner)
    return predictions


def loo_knn_accuracy(matrix: DistanceMatrix, labels, k: int = 1) -> float:
    """Leave-one-out k-NN accuracy over a square distance matrix."""
    labels = list(labels)
    n = len(labels)
    if matrix.values.shape[0] != n:
        raise ValueError("label count does not match the matrix")
    hits = 0
    for i in range(n):
        row = matrix.values[i].copy()
        row[i] = np.inf
        pred = knn_classify(row, labels, k)[0]
        hits += pred == labels[i]
    return hits / n


def pga_features(densities, n_components: int):
    """Fit a PGA model and return it with the training coordinates."""
    densities = list(densities)
    model = sphere.pga(densities, n_components)
    coords = np.stack([sphere.project_coords(model, d) for d in densities])
    return model, coords


def loo_regression(features, scores):
    """
    Leave-one-out ordinary least squares with an intercept.

    Each sample is predicted by a fit on all other samples. Rank-deficient
    designs fall back to ridge with a small trace-scaled regularizer
    (1e-8 * trace(X'X) / n_cols). Returns (predictions, pearson_r).
    """
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    y = np.asarray(scores, dtype=float).reshape(-1)
    n = x.shape[0]
    if y.size != n:
        raise ValueError("feature and score counts differ")
    if n < 3:
        raise ValueError(f"need at least 3 samples, got {n}")
    predictions = np.empty(n)
    for i in range(n):
        mask = np.arange(n) != i
        design = np.column_stack([np.ones(n - 1), x[mask]])
        beta, _, rank, _ = np.linalg.lstsq(design, y[mask], rcond=None)
        if rank < design.shape[1]:
            gram = design.T @ design
            lam = 1e-8 * np.trace(gram) / design.shape[1]
            beta = np.linalg.solve(gram + lam * np.eye(design.shape[1]), design.T @ y[mask])
        predictions[i] = float(np.concatenate([[1.0], x[i]]) @ beta)
    return predictions, pearson_r(predictions, y)


def pearson_r(a, b) -> float:
    """Pearson correlation with a 0.0 guard for zero-variance inputs."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    da, db = a - a.mean(), b - b.mean()
    denom = np.sqrt((da * da).sum() * (db * db).sum())
    if denom == 0:
        return 0.0
    return float((da * db).sum() / denom)


# ---------------------------------------------------------------------------
# Timing comparison


@dataclass
class BenchReport:
    """Per-pair wall-time statistics for the two metric families."""

    n_points: int
    grid_size: int
    sigma: float
    pairs: int
    seed: int
    hilbert_mean_s: float
    hilbert_std_s: float
    w1_mean_s: float
    w1_std_s: float

    def __post_init__(self):
        if self.pairs < 1:
            raise ValueError("pair count must be >= 1")
        if self.hilbert_mean_s <= 0 or self.w1_mean_s <= 0:
            raise ValueError("mean times must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def write_bench_report(path, report: BenchReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_bench_report(path) -> BenchReport:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return BenchReport(**payload)
    except TypeError as exc:
        raise ParseError(f"{path}: not a benchmark report: {exc}") from exc


def random_diagram(rng: np.random.Generator, n_points: int) -> PersistenceDiagram:
    """Random unit-square diagram with `n_points` off-diagonal points."""
    births = rng.uniform(0.0, 0.6, n_points)
    deaths = births + rng.uniform(0.02, 0.35, n_points)
    return PersistenceDiagram(1, np.column_stack([births, deaths]))


def benchmark(
    n_points: int,
    grid_size: int = 64,
    sigma: float = 0.05,
    trials: int = 100,
    seed: int = 0,
    repeats: int = 7,
) -> BenchReport:
    """
    Time per-pair distance computation for both metric families.

    Generates `trials` seeded random diagram pairs with `n_points` points
    each. The matching side times one Hungarian solve per pair (mean and
    std over pairs). The sphere side amortizes density estimation (one
    density per diagram in any realistic pipeline), then times the batched
    inner-product-plus-arccos over all pairs; per-pair cost is the batch
    time divided by the pair count, with mean and std over `repeats` runs.
    """
    if trials < 10:
        raise ValueError(f"need at least 10 trials, got {trials}")
    if repeats < 2:
        raise ValueError(f"need at least 2 repeats, got {repeats}")
    from .density import kde  # local import to keep module load light

    rng = np.random.default_rng(seed)
    xs = [random_diagram(rng, n_points) for _ in range(trials)]
    ys = [random_diagram(rng, n_points) for _ in range(trials)]

    # Densities are computed once per diagram and reused across all pairs.
    flat_x = np.stack(
        [sqrt_transform(kde(d, sigma, grid_size)).grid.ravel() for d in xs]
    )
    flat_y = np.stack(
        [sqrt_transform(kde(d, sigma, grid_size)).grid.ravel() for d in ys]
    )
    cells = grid_size * grid_size

    def hilbert_batch():
        start = time.perf_counter()
        cosines = np.einsum("ij,ij->i", flat_x, flat_y) / cells
        np.arccos(np.clip(cosines, -1.0, 1.0))
        return (time.perf_counter() - start) / trials

    hilbert_batch()  # warmup
    hilbert_times = np.asarray([hilbert_batch() for _ in range(repeats)])

    wasserstein(xs[0], ys[0], 1)  # warmup
    w1_times = np.empty(trials)
    for t in range(trials):
        start = time.perf_counter()
        wasserstein(xs[t], ys[t], 1)
        w1_times[t] = time.perf_counter() - start

    return BenchReport(
        n_points=n_points,
        grid_size=grid_size,
        sigma=sigma,
        pairs=trials,
        seed=seed,
        hilbert_mean_s=float(hilbert_times.mean()),
        hilbert_std_s=float(hilbert_times.std()),
        w1_mean_s=float(w1_times.mean()),
        w1_std_s=float(w1_times.std()),
    )


# ---------------------------------------------------------------------------
# Synthetic benchmark data


CLASS_LABELS = ("one_loop", "two_loops", "noise")


def _loop_points(rng: np.random.Generator, n: int, center, radius: float) -> np.ndarray:
    # Evenly spaced angles with jitter keep the cycle's birth scale stable
    # across instances while the noise keeps instances distinct.
    theta = 2.0 * np.pi * (np.arange(n) + rng.uniform(-0.3, 0.3, n)) / n
    r = radius * (1.0 + rng.normal(0.0, 0.03, n))
    return np.column_stack(
        [center[0] + r * np.cos(theta), center[1] + r * np.sin(theta)]
    )


def _one_loop(rng: np.random.Generator, n: int) -> np.ndarray:
    return _loop_points(rng, n, (0.0, 0.0), 1.0)


def _two_loops(rng: np.random.Generator, n: int) -> np.ndarray:
    half = n // 2
    first = _loop_points(rng, half, (-0.8, 0.0), 0.45)
    second = _loop_points(rng, n - half, (0.8, 0.0), 0.45)
    return np.vstack([first, second])


def _uniform_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, (n, 2))


_MAKERS = {
    "one_loop": _one_loop,
    "two_loops": _two_loops,
    "noise": _uniform_noise,
}


def synthetic_clouds(
    per_class: int = 30,
    n_classes: int = 3,
    seed: int = 0,
    n_min: int = 20,
    n_max: int = 40,
):
    """
    Seeded 3-class point-cloud benchmark.

    Classes: one noisy loop (one dominant 1-cycle), two disjoint noisy
    loops (two 1-cycles), and uniform noise (only short-lived 1-cycles).
    Every cloud is drawn until its H1 diagram is non-empty so the density
    pipeline never sees an empty diagram; the redraw sequence is part of
    the seeded stream, so outputs are reproducible.

    Returns (clouds, labels).
    """
    if not 1 <= n_classes <= len(CLASS_LABELS):
        raise ValueError(f"n_classes must be in [1, {len(CLASS_LABELS)}]")
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    if not 3 <= n_min <= n_max:
        raise ValueError("need 3 <= n_min <= n_max")
    rng = np.random.default_rng(seed)
    clouds, labels = [], []
    for label in CLASS_LABELS[:n_classes]:
        maker = _MAKERS[label]
        for _ in range(per_class):
            for _attempt in range(64):
                n = int(rng.integers(n_min, n_max + 1))
                cloud = maker(rng, n)
                _, pd1 = diagram_of_cloud(cloud)
                if pd1.pairs.shape[0] > 0:
                    break
            else:
                raise RuntimeError(f"could not draw a cloud with 1-cycles for {label}")
            clouds.append(cloud)
            labels.append(label)
    return clouds, labels


# ---------------------------------------------------------------------------
# Distance-matrix CSV


def write_matrix(path, matrix: DistanceMatrix) -> None:
    """CSV with a label header row and a label column."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("," + ",".join(matrix.labels) + "\n")
        for label, row in zip(matrix.labels, matrix.values):
            fh.write(label + "," + ",".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix(path, metric: str = "hilbert") -> DistanceMatrix:
    """Read a matrix written by write_matrix."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(","):
            raise ParseError(f"{path}: missing label header row")
        labels = header.split(",")[1:]
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != len(labels) + 1:
                raise ParseError(f"{path}:{lineno}: wrong column count")
            try:
                rows.append([float(f) for f in fields[1:]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad distance row") from exc
    if len(rows) != len(labels):
        raise ParseError(f"{path}: row count does not match header labels")
    return DistanceMatrix(labels=labels, values=np.asarray(rows), metric=metric)
