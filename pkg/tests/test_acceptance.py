"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Run with `pytest tests/test_acceptance.py -v -s`."""

import math
import time
import warnings

import numpy as np
import pytest

from persphere.analysis import (
    benchmark,
    distance_matrix,
    loo_knn_accuracy,
    synthetic_clouds,
)
from persphere.density import kde, local_maxima, sqrt_transform, to_pdf
from persphere.persistence import (
    PersistenceDiagram,
    build_rips,
    cloud_diameter,
    compute_persistence,
    diagram_of_cloud,
    h0_unionfind,
    normalize_diagram,
)
from persphere.sphere import distance, exp_map, geodesic, log_map
from persphere.wasserstein import brute_force, wasserstein, alexandrov_geodesic

GRID = 64
BENCH_SEED = 7


def _report(num, name, passed, detail):
    print(f"ACCEPTANCE {num} {name}: {'PASS' if passed else 'FAIL'} ({detail})")
    assert passed, f"criterion {num} {name}: {detail}"


def _random_density(rng, sigma=0.05):
    n = int(rng.integers(1, 6))
    births = rng.uniform(0.05, 0.6, n)
    deaths = births + rng.uniform(0.05, 0.35, n)
    pd = PersistenceDiagram(1, np.column_stack([births, deaths]))
    return sqrt_transform(kde(pd, sigma, GRID))


def _random_small_diagram(rng, n):
    births = rng.uniform(0.0, 0.6, n)
    deaths = births + rng.uniform(0.02, 0.35, n)
    return PersistenceDiagram(1, np.column_stack([births, deaths]))


@pytest.fixture(scope="module")
def class_benchmark():
    clouds, labels = synthetic_clouds(per_class=30, seed=BENCH_SEED)
    diagrams = [diagram_of_cloud(c)[1] for c in clouds]
    scale = max(d.max_finite() for d in diagrams)
    normalized = [normalize_diagram(d, scale) for d in diagrams]
    return normalized, labels


def test_criterion_1_sphere_geometry_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_roundtrip = 0.0
    worst_endpoint = 0.0
    worst_arc = 0.0
    with warnings.catch_warnings():
        # Near-orthogonal pairs legitimately flag the injectivity boundary.
        warnings.simplefilter("ignore", RuntimeWarning)
        for _ in range(1000):
            a = _random_density(rng)
            b = _random_density(rng)
            v = log_map(a, b)
            back = exp_map(a, v)
            worst_roundtrip = max(worst_roundtrip, float(np.abs(back.grid - b.grid).max()))
            end = geodesic(a, b, 1.0)
            worst_endpoint = max(worst_endpoint, float(np.abs(end.grid - b.grid).max()))
            d = distance(a, b)
            for s in (0.25, 0.5, 0.75):
                point = geodesic(a, b, s)
                worst_arc = max(worst_arc, abs(distance(a, point) - s * d))

        pool = [_random_density(rng) for _ in range(60)]
        flat = np.stack([p.grid.ravel() for p in pool])
        cosines = np.clip((flat @ flat.T) / (GRID * GRID), -1.0, 1.0)
        dmat = np.arccos(cosines)
        np.fill_diagonal(dmat, 0.0)
        worst_triangle = 0.0
        for _ in range(1000):
            i, j, k = rng.integers(0, len(pool), 3)
            worst_triangle = max(worst_triangle, dmat[i, j] - dmat[i, k] - dmat[k, j])
    elapsed = time.perf_counter() - start
    passed = (
        worst_roundtrip <= 1e-6
        and worst_endpoint <= 1e-6
        and worst_arc <= 1e-6
        and worst_triangle <= 1e-9
        and elapsed < 60.0
    )
    _report(
        1,
        "sphere geometry",
        passed,
        f"roundtrip {worst_roundtrip:.2e}, endpoint {worst_endpoint:.2e}, "
        f"arc {worst_arc:.2e}, triangle {worst_triangle:.2e}, {elapsed:.1f}s",
    )


def test_criterion_2_wasserstein_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(500):
        nx = int(rng.integers(0, 5))
        ny = int(rng.integers(0, 9 - nx))
        x = _random_small_diagram(rng, nx)
        y = _random_small_diagram(rng, ny)
        for q in (1, 2):
            solved = wasserstein(x, y, q)[0]
            oracle = brute_force(x, y, q)
            worst = max(worst, abs(solved - oracle))
    elapsed = time.perf_counter() - start
    passed = worst <= 1e-12 and elapsed < 60.0
    _report(2, "matching oracle", passed, f"max gap {worst:.2e}, {elapsed:.1f}s")


def test_criterion_3_persistence_correctness():
    start = time.perf_counter()
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    _, pd1 = compute_persistence(build_rips(square, 3.0))
    square_exact = (
        pd1.pairs.shape == (1, 2)
        and pd1.pairs[0, 0] == 1.0
        and pd1.pairs[0, 1] == math.sqrt(2.0)
        and pd1.essential.size == 0
    )
    rng = np.random.default_rng(303)
    agree = True
    for _ in range(200):
        n = int(rng.integers(2, 26))
        dim = int(rng.integers(1, 4))
        cloud = rng.normal(size=(n, dim))
        fast = h0_unionfind(cloud)
        slow, _ = compute_persistence(build_rips(cloud, cloud_diameter(cloud)))
        if not np.array_equal(fast.sorted_pairs(), slow.sorted_pairs()):
            agree = False
            break
        if fast.essential.size != slow.essential.size:
            agree = False
            break
    elapsed = time.perf_counter() - start
    passed = square_exact and agree and elapsed < 120.0
    _report(
        3,
        "persistence correctness",
        passed,
        f"unit square exact: {square_exact}, union-find agreement: {agree}, "
        f"{elapsed:.1f}s",
    )


def test_criterion_4_discrimination(class_benchmark):
    normalized, labels = class_benchmark
    pdfs = [kde(d, 0.05, GRID) for d in normalized]
    acc_hilbert = loo_knn_accuracy(distance_matrix(pdfs, "hilbert", labels), labels, 1)
    acc_w1 = loo_knn_accuracy(distance_matrix(normalized, "w1", labels), labels, 1)
    gap_pp = abs(acc_hilbert - acc_w1) * 100
    passed = acc_hilbert >= 0.90 and gap_pp <= 5.0
    _report(
        4,
        "3-class discrimination",
        passed,
        f"hilbert {acc_hilbert:.3f}, w1 {acc_w1:.3f}, gap {gap_pp:.1f}pp",
    )


def test_criterion_5_speed_claims():
    speed = benchmark(n_points=30, grid_size=64, sigma=0.05, trials=100, seed=5)
    speed_ratio = speed.w1_mean_s / speed.hilbert_mean_s
    k32 = benchmark(n_points=30, grid_size=32, sigma=0.05, trials=1024, seed=5, repeats=11)
    k64 = benchmark(n_points=30, grid_size=64, sigma=0.05, trials=1024, seed=5, repeats=11)
    k_ratio = k64.hilbert_mean_s / k32.hilbert_mean_s
    n20 = benchmark(n_points=20, grid_size=64, sigma=0.05, trials=100, seed=5)
    n40 = benchmark(n_points=40, grid_size=64, sigma=0.05, trials=100, seed=5)
    n_ratio = n40.w1_mean_s / n20.w1_mean_s
    passed = speed_ratio >= 10.0 and 3.0 <= k_ratio <= 6.0 and n_ratio >= 4.0
    _report(
        5,
        "speed claims",
        passed,
        f"hilbert/w1 speedup {speed_ratio:.0f}x, K 32->64 ratio {k_ratio:.2f}, "
        f"w1 20->40 ratio {n_ratio:.2f}",
    )


def test_criterion_6_sigma_trend(class_benchmark):
    normalized, labels = class_benchmark
    accs = {}
    for sigma in (0.02, 0.3):
        pdfs = [kde(d, sigma, GRID) for d in normalized]
        accs[sigma] = loo_knn_accuracy(
            distance_matrix(pdfs, "hilbert", labels), labels, 1
        )
    passed = accs[0.02] >= accs[0.3]
    _report(
        6,
        "sigma sweep trend",
        passed,
        f"acc(0.02)={accs[0.02]:.3f} >= acc(0.3)={accs[0.3]:.3f}",
    )


def test_criterion_7_saturation():
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(10):
        # supports confined to opposite corners of the unit square
        b1 = rng.uniform(0.05, 0.15, 2)
        x = PersistenceDiagram(1, np.column_stack([b1, b1 + rng.uniform(0.1, 0.2, 2)]))
        b2 = rng.uniform(0.65, 0.75, 2)
        y = PersistenceDiagram(1, np.column_stack([b2, b2 + rng.uniform(0.1, 0.2, 2)]))
        a = sqrt_transform(kde(x, 0.02, GRID))
        b = sqrt_transform(kde(y, 0.02, GRID))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            worst = max(worst, abs(distance(a, b) - np.pi / 2))
    passed = worst <= 1e-6
    _report(7, "saturation", passed, f"max |d - pi/2| = {worst:.2e}")


def test_criterion_8_geodesic_semantics():
    x = PersistenceDiagram(1, np.array([[0.10, 0.40], [0.30, 0.70], [0.55, 0.95]]))
    y = PersistenceDiagram(1, np.array([[0.20, 0.52], [0.40, 0.80], [0.65, 0.85]]))
    sigma = 0.04
    psi_x = sqrt_transform(kde(x, sigma, GRID))
    psi_y = sqrt_transform(kde(y, sigma, GRID))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        midpoint = to_pdf(geodesic(psi_x, psi_y, 0.5))
    modes = local_maxima(midpoint.grid, min_ratio=0.1)
    expected = [
        (int(d * GRID), int(b * GRID))
        for b, d in np.vstack([x.pairs, y.pairs])
    ]
    mode_cells_match = len(modes) == 6 and all(
        min(abs(mi - ei) + abs(mj - ej) for ei, ej in expected) <= 1
        for mi, mj in modes
    )

    _, matching = wasserstein(x, y, 2)
    fully_matched = all(i is not None and j is not None for i, j in matching.pairs)
    alexandrov_mid = alexandrov_geodesic(x, y, 0.5)
    count_ok = alexandrov_mid.pairs.shape[0] == len(matching.pairs) == 3

    passed = mode_cells_match and fully_matched and count_ok
    _report(
        8,
        "geodesic semantics",
        passed,
        f"sphere midpoint modes: {len(modes)} (want 6 at endpoint sites), "
        f"matched interpolation points: {alexandrov_mid.pairs.shape[0]} (want 3)",
    )
