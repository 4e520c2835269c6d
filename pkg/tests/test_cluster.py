import math

import numpy as np
import pytest

from crashcast.core import EARTH_RADIUS_KM, GeoPoint, haversine_km
from crashcast.features import (
    NOISE,
    ClusterParams,
    adaptive_eps,
    cluster_density,
    cyclical_encode,
    dbscan_haversine,
    min_enclosing_radius_km,
)


def brute_force_dbscan(points, eps_km, min_samples):
    """Independent reference: core components via O(n^2) adjacency, border
    points to the nearest core (ties to the lowest index)."""
    n = len(points)
    d = np.array([[haversine_km(a, b) for b in points] for a in points])
    neighbors = [np.flatnonzero(d[i] <= eps_km) for i in range(n)]
    core = np.array([len(nb) >= min_samples for nb in neighbors])

    labels = np.full(n, NOISE)
    comp = {}
    next_label = 0
    for i in range(n):
        if not core[i] or labels[i] != NOISE:
            continue
        # BFS over the core graph
        queue = [i]
        labels[i] = next_label
        while queue:
            cur = queue.pop()
            for j in neighbors[cur]:
                if core[j] and labels[j] == NOISE:
                    labels[j] = next_label
                    queue.append(j)
        next_label += 1
    for i in range(n):
        if core[i] or labels[i] != NOISE:
            continue
        cands = [j for j in neighbors[i] if core[j]]
        if not cands:
            continue
        best = min(cands, key=lambda j: (d[i][j], j))
        labels[i] = labels[best]
    return labels


def labels_equivalent(a, b):
    """Equal partitions up to label renaming; noise must match exactly."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    if not np.array_equal(a == NOISE, b == NOISE):
        return False
    mapping = {}
    for x, y in zip(a, b):
        if x == NOISE:
            continue
        if x in mapping and mapping[x] != y:
            return False
        mapping[x] = y
    return len(set(mapping.values())) == len(mapping)


def random_points(rng, n, spread=0.05):
    lat0, lon0 = 40.5, -77.5
    return [
        GeoPoint(lat0 + float(rng.normal(0, spread)), lon0 + float(rng.normal(0, spread)))
        for _ in range(n)
    ]


def test_three_close_points_one_cluster():
    pts = [GeoPoint(40.0, -75.0), GeoPoint(40.002, -75.0), GeoPoint(40.0, -75.003)]
    labels = dbscan_haversine(pts, ClusterParams(eps_km=1.0, min_samples=3))
    assert set(labels) == {0}


def test_isolated_point_is_noise():
    pts = [GeoPoint(40.0, -75.0)]
    labels = dbscan_haversine(pts, ClusterParams(eps_km=1.0, min_samples=3))
    assert labels.tolist() == [NOISE]


def test_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(30)
    for trial in range(10):
        n = int(rng.integers(20, 200))
        pts = random_points(rng, n)
        params = ClusterParams(eps_km=1.0, min_samples=3)
        fast = dbscan_haversine(pts, params)
        slow = brute_force_dbscan(pts, 1.0, 3)
        assert labels_equivalent(fast, slow), f"trial {trial} diverged"


def test_permutation_invariance():
    rng = np.random.default_rng(31)
    pts = random_points(rng, 120)
    params = ClusterParams(eps_km=1.0, min_samples=3)
    base = dbscan_haversine(pts, params)
    perm = rng.permutation(len(pts))
    shuffled = [pts[i] for i in perm]
    permuted = dbscan_haversine(shuffled, params)
    # map back to original order
    restored = np.empty_like(base)
    for out_idx, orig_idx in enumerate(perm):
        restored[orig_idx] = permuted[out_idx]
    assert labels_equivalent(base, restored)


def test_adaptive_eps_uniform_density():
    pts = [GeoPoint(40.0 + 0.4 * i, -75.0) for i in range(10)]  # one per cell at res 9
    eps = adaptive_eps(pts, 1.0, cell_resolution=9)
    assert np.allclose(eps, 1.0)


def test_adaptive_eps_dense_cell_hits_lower_clamp():
    # 8 points stacked in one spot (4x the median cell count of 2)
    pts = [GeoPoint(40.0, -75.0)] * 8
    pts += [GeoPoint(41.0, -76.0)] * 2
    pts += [GeoPoint(42.0, -77.0)] * 2
    eps = adaptive_eps(pts, 1.0, cell_resolution=9)
    assert eps[0] == pytest.approx(1.0 * math.sqrt(2 / 8), abs=1e-12)
    assert eps[-1] == pytest.approx(1.0, abs=1e-12)


def test_adaptive_eps_locality():
    pts = [GeoPoint(40.0, -75.0)] * 4 + [GeoPoint(41.5, -76.5)] * 4
    eps_a = adaptive_eps(pts, 1.0, cell_resolution=9)
    # moving the far group does not change the near group's eps
    pts_b = [GeoPoint(40.0, -75.0)] * 4 + [GeoPoint(42.4, -74.9)] * 4
    eps_b = adaptive_eps(pts_b, 1.0, cell_resolution=9)
    assert np.allclose(eps_a[:4], eps_b[:4])


def test_cluster_density_noise_zero():
    pts = [GeoPoint(40.0, -75.0)]
    labels = np.array([NOISE])
    assert cluster_density(pts, labels, 1.0).tolist() == [0.0]


def test_cluster_density_coincident_points_floor():
    pts = [GeoPoint(40.0, -75.0)] * 3
    labels = np.array([0, 0, 0])
    density = cluster_density(pts, labels, eps_km=1.0)
    assert np.allclose(density, 3.0 / math.pi)


def test_cluster_density_constant_within_cluster():
    rng = np.random.default_rng(32)
    pts = random_points(rng, 60, spread=0.01)
    labels = dbscan_haversine(pts, ClusterParams(eps_km=2.0, min_samples=3))
    density = cluster_density(pts, labels, 2.0)
    for label in set(labels.tolist()) - {NOISE}:
        values = density[labels == label]
        assert np.allclose(values, values[0])


def test_min_enclosing_radius_contains_all_points():
    rng = np.random.default_rng(33)
    for _ in range(20):
        pts = rng.normal(0, 5.0, size=(int(rng.integers(1, 60)), 2))
        r = min_enclosing_radius_km(pts)
        # verify against every pairwise midpoint circle lower bound
        from itertools import combinations

        max_pair = max((np.linalg.norm(a - b) for a, b in combinations(pts, 2)), default=0.0)
        assert r >= max_pair / 2 - 1e-9
        # and the circle is tight within a small factor of the point spread
        centroid = pts.mean(axis=0)
        assert r <= np.linalg.norm(pts - centroid, axis=1).max() + 1e-9


def test_min_enclosing_radius_known_cases():
    assert min_enclosing_radius_km(np.array([[0.0, 0.0]])) == 0.0
    assert min_enclosing_radius_km(np.array([[0.0, 0.0], [2.0, 0.0]])) == pytest.approx(1.0)
    # equilateral triangle with side 1: circumradius 1/sqrt(3)
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    assert min_enclosing_radius_km(tri) == pytest.approx(1 / math.sqrt(3), abs=1e-9)


def test_cyclical_encode_examples():
    s, c = cyclical_encode(0, 24)
    assert (s, c) == (0.0, 1.0)
    s, c = cyclical_encode(6, 24)
    assert s == pytest.approx(1.0, abs=1e-12)
    assert c == pytest.approx(0.0, abs=1e-12)
    s, c = cyclical_encode(12, 12)
    assert s == pytest.approx(0.0, abs=1e-12)
    assert c == pytest.approx(1.0, abs=1e-12)


def test_cyclical_encode_unit_norm():
    rng = np.random.default_rng(34)
    for _ in range(200):
        v = float(rng.uniform(-100, 100))
        p = float(rng.uniform(0.1, 50))
        s, c = cyclical_encode(v, p)
        assert s * s + c * c == pytest.approx(1.0, abs=1e-9)
