"""Hierarchical geospatial cell index.

A resolution-r grid tiles latitude into 2^r rows and longitude into
2^(r+1) columns with half-open [low, high) intervals, so every child cell
tiles its parent exactly and a point maps to one cell per resolution (the
north pole and the antimeridian clamp into the last row/column). Used for
cache keys, hotspot aggregation, geographic CV folds, and the crash store
index.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import GeoPoint

MIN_RESOLUTION = 0
MAX_RESOLUTION = 12


@dataclass(frozen=True, order=True)
class CellId:
    resolution: int
    x: int  # latitude row
    y: int  # longitude column

    def __post_init__(self) -> None:
        if not MIN_RESOLUTION <= self.resolution <= MAX_RESOLUTION:
            raise ValueError(f"resolution out of range: {self.resolution}")
        rows, cols = grid_shape(self.resolution)
        if not (0 <= self.x < rows and 0 <= self.y < cols):
            raise ValueError(f"cell indices out of range: {self}")


def grid_shape(resolution: int) -> tuple[int, int]:
    return (1 << resolution, 1 << (resolution + 1))


def cell_of(point: GeoPoint, resolution: int) -> CellId:
    rows, cols = grid_shape(resolution)
    x = int((point.lat + 90.0) / 180.0 * rows)
    y = int((point.lon + 180.0) / 360.0 * cols)
    return CellId(resolution, min(x, rows - 1), min(y, cols - 1))


def parent(cell: CellId) -> CellId:
    if cell.resolution == MIN_RESOLUTION:
        raise ValueError("resolution-0 cells have no parent")
    return CellId(cell.resolution - 1, cell.x >> 1, cell.y >> 1)


def children(cell: CellId) -> list[CellId]:
    if cell.resolution >= MAX_RESOLUTION:
        raise ValueError(f"resolution {MAX_RESOLUTION} cells have no children")
    r = cell.resolution + 1
    return [
        CellId(r, 2 * cell.x + dx, 2 * cell.y + dy)
        for dx in (0, 1)
        for dy in (0, 1)
    ]


def cell_neighbors(cell: CellId) -> list[CellId]:
    """Moore neighborhood: longitude wraps, latitude rows clip at the poles."""
    rows, cols = grid_shape(cell.resolution)
    out = []
    seen = set()
    for dx in (-1, 0, 1):
        x = cell.x + dx
        if not 0 <= x < rows:
            continue
        for dy in (-1, 0, 1):
            y = (cell.y + dy) % cols
            key = (x, y)
            if key == (cell.x, cell.y) or key in seen:
                continue
            seen.add(key)
            out.append(CellId(cell.resolution, x, y))
    return out


def cell_bounds(cell: CellId) -> tuple[float, float, float, float]:
    """(min_lat, max_lat, min_lon, max_lon) of the cell."""
    rows, cols = grid_shape(cell.resolution)
    lat_step = 180.0 / rows
    lon_step = 360.0 / cols
    min_lat = -90.0 + cell.x * lat_step
    min_lon = -180.0 + cell.y * lon_step
    return (min_lat, min_lat + lat_step, min_lon, min_lon + lon_step)


def cell_center(cell: CellId) -> GeoPoint:
    min_lat, max_lat, min_lon, max_lon = cell_bounds(cell)
    return GeoPoint(0.5 * (min_lat + max_lat), 0.5 * (min_lon + max_lon))


def cells_in_bbox(min_lat: float, min_lon: float, max_lat: float, max_lon: float,
                  resolution: int) -> list[CellId]:
    """All cells whose area intersects the box (no longitude wrap in the box)."""
    if min_lat > max_lat or min_lon > max_lon:
        raise ValueError("bbox minimums must not exceed maximums")
    lo = cell_of(GeoPoint(max(min_lat, -90.0), max(min_lon, -180.0)), resolution)
    hi = cell_of(GeoPoint(min(max_lat, 90.0), min(max_lon, 180.0)), resolution)
    return [
        CellId(resolution, x, y)
        for x in range(lo.x, hi.x + 1)
        for y in range(lo.y, hi.y + 1)
    ]
