"""Great-circle DBSCAN with adaptive radii and cluster density.

Clustering semantics are canonical so labels do not depend on input order:
core points are grouped by connected components of the core-to-core
reachability graph, and border points attach to the nearest core (ties to
the lowest core index). Neighbor search goes through a degree grid bucketed
at the epsilon radius, so region queries only touch nearby buckets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..cells import cell_of
from ..core import EARTH_RADIUS_KM, GeoPoint

NOISE = -1
KM_PER_DEG_LAT = math.pi * EARTH_RADIUS_KM / 180.0


@dataclass(frozen=True)
class ClusterParams:
    eps_km: float = 1.0
    min_samples: int = 3
    adaptive: bool = False
    adapt_bounds: tuple[float, float] = (0.5, 2.0)
    adapt_resolution: int = 12  # cell grid used for local density

    def __post_init__(self) -> None:
        if self.eps_km <= 0:
            raise ValueError("eps_km must be positive")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")


@dataclass(frozen=True)
class ClusterAssignment:
    label: int  # >= 0, or NOISE
    density: float  # members per km^2; 0 for noise


def _haversine_vec(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    lat1 = math.radians(lat)
    lon1 = math.radians(lon)
    lat2 = np.radians(lats)
    lon2 = np.radians(lons)
    s = (np.sin((lat2 - lat1) / 2.0) ** 2
         + math.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2)
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(s)))


class _NeighborGrid:
    """Degree-grid buckets sized to the largest epsilon in play."""

    def __init__(self, lats: np.ndarray, lons: np.ndarray, eps_km_max: float):
        self.lats = lats
        self.lons = lons
        self.lat_step = max(eps_km_max / KM_PER_DEG_LAT, 1e-9)
        max_abs_lat = float(np.abs(lats).max()) if lats.size else 0.0
        cos_floor = max(math.cos(math.radians(min(max_abs_lat + 1.0, 89.9))), 0.02)
        self.lon_step = self.lat_step / cos_floor
        self.buckets: dict[tuple[int, int], list[int]] = {}
        for i in range(lats.shape[0]):
            self.buckets.setdefault(self._key(lats[i], lons[i]), []).append(i)

    def _key(self, lat: float, lon: float) -> tuple[int, int]:
        return (int(math.floor(lat / self.lat_step)), int(math.floor(lon / self.lon_step)))

    def candidates(self, i: int) -> np.ndarray:
        kx, ky = self._key(self.lats[i], self.lons[i])
        out: list[int] = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                out.extend(self.buckets.get((kx + dx, ky + dy), ()))
        return np.asarray(out, dtype=np.int64)

    def neighbors_within(self, i: int, eps_km: float) -> np.ndarray:
        cand = self.candidates(i)
        d = _haversine_vec(self.lats[i], self.lons[i], self.lats[cand], self.lons[cand])
        hit = cand[d <= eps_km]
        hit.sort()
        return hit


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def dbscan_haversine(
    points: Sequence[GeoPoint],
    params: ClusterParams,
    eps_per_point: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Cluster labels (>= 0) with NOISE = -1.

    A point is core iff at least min_samples points (itself included) lie
    within its epsilon. Core points in the same reachability component share
    a label; border points take the nearest core's label.
    """
    n = len(points)
    if n == 0:
        return np.empty(0, dtype=int)
    lats = np.array([p.lat for p in points])
    lons = np.array([p.lon for p in points])

    if params.adaptive and eps_per_point is None:
        eps_per_point = adaptive_eps(points, params.eps_km, params.adapt_resolution,
                                     params.adapt_bounds)
    if eps_per_point is not None:
        eps_arr = np.asarray(eps_per_point, dtype=float)
        eps_max = float(eps_arr.max())
    else:
        eps_arr = np.full(n, params.eps_km)
        eps_max = params.eps_km

    grid = _NeighborGrid(lats, lons, eps_max)
    neighborhoods = [grid.neighbors_within(i, float(eps_arr[i])) for i in range(n)]
    core = np.array([len(nb) >= params.min_samples for nb in neighborhoods])

    uf = _UnionFind(n)
    for i in np.flatnonzero(core):
        for j in neighborhoods[i]:
            if core[j]:
                uf.union(i, int(j))

    labels = np.full(n, NOISE, dtype=int)
    roots: dict[int, int] = {}
    for i in np.flatnonzero(core):
        root = uf.find(i)
        if root not in roots:
            roots[root] = len(roots)
        labels[i] = roots[root]

    for i in np.flatnonzero(~core):
        cand = neighborhoods[i]
        core_cand = cand[core[cand]]
        if core_cand.size == 0:
            continue
        d = _haversine_vec(lats[i], lons[i], lats[core_cand], lons[core_cand])
        best = core_cand[np.lexsort((core_cand, d))[0]]
        labels[i] = labels[best]
    return labels


def adaptive_eps(
    points: Sequence[GeoPoint],
    base_eps_km: float,
    cell_resolution: int = 12,
    bounds: tuple[float, float] = (0.5, 2.0),
) -> np.ndarray:
    """Per-point epsilon scaled by local density relative to the median
    occupied cell.

    eps_i = base * clamp(sqrt(rho_median / rho_cell(i)), bounds); dense cells
    shrink the radius, sparse cells widen it, and only the point's own cell
    matters.
    """
    if base_eps_km <= 0:
        raise ValueError("base epsilon must be positive")
    counts: dict = {}
    keys = [cell_of(p, cell_resolution) for p in points]
    for key in keys:
        counts[key] = counts.get(key, 0) + 1
    rho = np.array([counts[key] for key in keys], dtype=float)
    rho_median = float(np.median(np.asarray(list(counts.values()), dtype=float)))
    lo, hi = bounds
    scale = np.clip(np.sqrt(rho_median / rho), lo, hi)
    return base_eps_km * scale


def _to_local_km(lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Equirectangular projection around the centroid, in km."""
    lat0 = float(lats.mean())
    lon0 = float(lons.mean())
    x = (lons - lon0) * KM_PER_DEG_LAT * math.cos(math.radians(lat0))
    y = (lats - lat0) * KM_PER_DEG_LAT
    return np.column_stack([x, y])


def _circle_two(a, b):
    center = (a + b) / 2.0
    return center, float(np.linalg.norm(a - center))


def _circumcircle(a, b, c):
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    if abs(d) < 1e-18:
        # collinear: widest pair
        best = None
        for p, q in ((a, b), (a, c), (b, c)):
            center, r = _circle_two(p, q)
            if best is None or r > best[1]:
                best = (center, r)
        return best
    ux = ((a[0] ** 2 + a[1] ** 2) * (b[1] - c[1]) + (b[0] ** 2 + b[1] ** 2) * (c[1] - a[1])
          + (c[0] ** 2 + c[1] ** 2) * (a[1] - b[1])) / d
    uy = ((a[0] ** 2 + a[1] ** 2) * (c[0] - b[0]) + (b[0] ** 2 + b[1] ** 2) * (a[0] - c[0])
          + (c[0] ** 2 + c[1] ** 2) * (b[0] - a[0])) / d
    center = np.array([ux, uy])
    return center, float(np.linalg.norm(a - center))


def min_enclosing_radius_km(pts: np.ndarray) -> float:
    """Radius of the minimal enclosing circle (Welzl, incremental form)."""
    n = pts.shape[0]
    if n == 0:
        return 0.0
    if n == 1:
        return 0.0
    order = np.random.default_rng(0).permutation(n)
    P = pts[order]
    slack = 1e-9

    center, r = _circle_two(P[0], P[1])
    for i in range(2, n):
        if np.linalg.norm(P[i] - center) <= r + slack:
            continue
        # P[i] on the boundary
        center, r = _circle_two(P[0], P[i])
        for j in range(1, i):
            if np.linalg.norm(P[j] - center) <= r + slack:
                continue
            # P[j] also on the boundary
            center, r = _circle_two(P[i], P[j])
            for k in range(j):
                if np.linalg.norm(P[k] - center) <= r + slack:
                    continue
                center, r = _circumcircle(P[i], P[j], P[k])
    return float(r)


def cluster_density(points: Sequence[GeoPoint], labels: np.ndarray, eps_km: float = 1.0) -> np.ndarray:
    """Members per km^2 for each point's cluster; 0 for noise.

    The area is the minimal enclosing circle of the members, floored at
    pi*eps^2 so degenerate clusters stay finite.
    """
    labels = np.asarray(labels)
    out = np.zeros(labels.shape[0])
    lats = np.array([p.lat for p in points])
    lons = np.array([p.lon for p in points])
    floor_area = math.pi * eps_km * eps_km
    for label in np.unique(labels):
        if label == NOISE:
            continue
        members = np.flatnonzero(labels == label)
        xy = _to_local_km(lats[members], lons[members])
        radius = min_enclosing_radius_km(xy)
        area = max(math.pi * radius * radius, floor_area)
        out[members] = members.size / area
    return out
