"""Feature-vector assembly: one fitted context turns records into the fixed
19-column numeric layout the boosters train and serve on.

The context bundles everything assembly needs — behavioral weights, the
environmental weight set, the clustered history with densities, and the
weather-space neighbor model — and serializes to a versioned JSON document.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..core import CrashRecord, GeoPoint, SeverityLevel
from .cluster import (
    NOISE,
    ClusterParams,
    _haversine_vec,
    _NeighborGrid,
    cluster_density,
    dbscan_haversine,
)
from .encode import cyclical_encode
from .risk import (
    BehavioralRiskWeights,
    DegenerateDesign,
    EnvironmentalRiskWeights,
    environmental_features,
    fit_environmental_weights,
    weighted_risk,
)
from .weather_knn import WeatherKnnModel, archetype_snapshot

FORMAT_NAME = "crashcast-features"
FORMAT_VERSION = 1

FEATURE_NAMES = (
    "impairment_risk",
    "distraction_risk",
    "adverse_road_conditions",
    "weather_risk",
    "total_environmental_risk",
    "weather_knn_risk",
    "hour_sin",
    "hour_cos",
    "month_sin",
    "month_cos",
    "cluster_density",
    "AGGRESSIVE_DRIVING",
    "LOCAL_ROAD",
    "UNBELTED",
    "CURVE_DVR_ERROR",
    "INTERSTATE",
    "INTERSECTION_RELATED",
    "ILLUMINATION",
    "ROAD_CONDITION",
)

IMPAIRMENT_FLAGS = ("ALCOHOL_RELATED", "DRUGGED_DRIVER", "MARIJUANA_RELATED")
DISTRACTION_FLAGS = ("CELL_PHONE", "DISTRACTED", "FATIGUE_ASLEEP")
PASSTHROUGH_FLAGS = ("AGGRESSIVE_DRIVING", "LOCAL_ROAD", "UNBELTED",
                     "CURVE_DVR_ERROR", "INTERSTATE", "INTERSECTION_RELATED")

# Contributing-factor groups surfaced by the prediction service.
FACTOR_GROUPS = {
    "weather": ("adverse_road_conditions", "weather_risk", "total_environmental_risk",
                "weather_knn_risk", "ILLUMINATION", "ROAD_CONDITION"),
    "temporal": ("hour_sin", "hour_cos", "month_sin", "month_cos"),
    "historical": ("cluster_density",),
    "behavioral": ("impairment_risk", "distraction_risk", "AGGRESSIVE_DRIVING", "UNBELTED"),
    "geometry": ("LOCAL_ROAD", "CURVE_DVR_ERROR", "INTERSTATE", "INTERSECTION_RELATED"),
}


def factor_group_indices() -> dict[str, list[int]]:
    index = {name: i for i, name in enumerate(FEATURE_NAMES)}
    return {group: [index[f] for f in names] for group, names in FACTOR_GROUPS.items()}


@dataclass
class ClusterModel:
    """Clustered training locations with per-member density, queryable for
    unseen points: the nearest cluster member within eps supplies the density."""

    lats: np.ndarray
    lons: np.ndarray
    densities: np.ndarray
    eps_km: float
    _grid: Optional[_NeighborGrid] = field(default=None, repr=False)

    def _ensure_grid(self) -> _NeighborGrid:
        if self._grid is None:
            self._grid = _NeighborGrid(self.lats, self.lons, self.eps_km)
        return self._grid

    def density_at(self, point: GeoPoint) -> float:
        if self.lats.shape[0] == 0:
            return 0.0
        grid = self._ensure_grid()
        kx = int(math.floor(point.lat / grid.lat_step))
        ky = int(math.floor(point.lon / grid.lon_step))
        cand: list[int] = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                cand.extend(grid.buckets.get((kx + dx, ky + dy), ()))
        if not cand:
            return 0.0
        cand_arr = np.asarray(cand, dtype=np.int64)
        d = _haversine_vec(point.lat, point.lon, self.lats[cand_arr], self.lons[cand_arr])
        near = d <= self.eps_km
        if not near.any():
            return 0.0
        d = d[near]
        cand_arr = cand_arr[near]
        best = cand_arr[np.lexsort((cand_arr, d))[0]]
        return float(self.densities[best])


@dataclass
class FeatureContext:
    behavioral: BehavioralRiskWeights
    environmental: EnvironmentalRiskWeights
    knn: WeatherKnnModel
    clusters: ClusterModel
    cluster_params: ClusterParams

    def feature_names(self) -> tuple[str, ...]:
        return FEATURE_NAMES


def fit_feature_context(
    records: Sequence[CrashRecord],
    cluster_params: Optional[ClusterParams] = None,
    knn_k: int = 25,
    knn_history_max: int = 4096,
    seed: int = 0,
) -> FeatureContext:
    """Fit every sub-model the assembler needs from validated records."""
    if not records:
        raise ValueError("cannot fit a feature context on zero records")
    params = cluster_params or ClusterParams()

    points = [r.location for r in records]
    labels = dbscan_haversine(points, params)
    densities = cluster_density(points, labels, params.eps_km)
    member = labels != NOISE
    clusters = ClusterModel(
        lats=np.array([p.lat for p in points])[member],
        lons=np.array([p.lon for p in points])[member],
        densities=densities[member],
        eps_km=params.eps_km,
    )

    rng = np.random.default_rng(seed)
    labeled_idx = [i for i, r in enumerate(records) if r.severity is not None]
    if not labeled_idx:
        raise ValueError("weather history needs severity labels")
    if len(labeled_idx) > knn_history_max:
        pick = rng.choice(len(labeled_idx), size=knn_history_max, replace=False)
        history_idx = [labeled_idx[i] for i in np.sort(pick)]
    else:
        history_idx = labeled_idx
    history = []
    for i in history_idx:
        r = records[i]
        snap = archetype_snapshot(r.codes.get("WEATHER1") or "1",
                                  r.crash_month or 6, r.hour_of_day or 12, r.occurred_at)
        history.append((snap, SeverityLevel(int(r.severity))))
    knn = WeatherKnnModel.fit(history, k=min(knn_k, len(history)))

    try:
        environmental = fit_environmental_weights(records)
    except (DegenerateDesign, ValueError):
        environmental = EnvironmentalRiskWeights()

    return FeatureContext(
        behavioral=BehavioralRiskWeights(),
        environmental=environmental,
        knn=knn,
        clusters=clusters,
        cluster_params=params,
    )


def _flag01(record: CrashRecord, name: str) -> float:
    v = record.flags.get(name)
    return float(v) if v is not None else 0.0


def _code_float(record: CrashRecord, name: str) -> float:
    v = record.codes.get(name)
    if v is None:
        return 0.0
    try:
        return float(v)
    except ValueError:
        return 0.0


def assemble_feature_vector(record: CrashRecord, context: FeatureContext) -> np.ndarray:
    """Deterministic 19-feature vector in FEATURE_NAMES order."""
    impairment = weighted_risk([_flag01(record, f) for f in IMPAIRMENT_FLAGS],
                               context.behavioral.impairment)
    distraction = weighted_risk([_flag01(record, f) for f in DISTRACTION_FLAGS],
                                context.behavioral.distraction)
    adverse_road, weather_risk, total_env = environmental_features(record, context.environmental)

    hour = record.hour_of_day
    if hour is None:
        hour = record.occurred_at.hour if record.occurred_at else 12
    month = record.crash_month
    if month is None:
        month = record.occurred_at.month if record.occurred_at else 6
    hour_sin, hour_cos = cyclical_encode(float(hour), 24.0)
    month_sin, month_cos = cyclical_encode(float(month), 12.0)

    snap = archetype_snapshot(record.codes.get("WEATHER1") or "1", month, hour, record.occurred_at)
    knn_risk = context.knn.risk_for(snap)

    density = context.clusters.density_at(record.location) if record.location else 0.0

    vec = [
        impairment,
        distraction,
        adverse_road,
        weather_risk,
        total_env,
        knn_risk,
        hour_sin,
        hour_cos,
        month_sin,
        month_cos,
        density,
    ]
    vec.extend(_flag01(record, name) for name in PASSTHROUGH_FLAGS)
    vec.append(_code_float(record, "ILLUMINATION"))
    vec.append(_code_float(record, "ROAD_CONDITION"))
    return np.asarray(vec, dtype=float)


def assemble_features(records: Sequence[CrashRecord], context: FeatureContext) -> np.ndarray:
    """Feature matrix over records, rows in input order."""
    return np.stack([assemble_feature_vector(r, context) for r in records]) if records else \
        np.empty((0, len(FEATURE_NAMES)))


def context_to_dict(context: FeatureContext) -> dict:
    env = context.environmental
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "feature_names": list(FEATURE_NAMES),
        "behavioral": {
            "impairment": list(context.behavioral.impairment),
            "distraction": list(context.behavioral.distraction),
        },
        "environmental": {
            "alpha": env.alpha,
            "beta": env.beta,
            "gamma": env.gamma,
            "road_component": list(env.road_component),
            "compound": list(env.compound),
            "fitted": env.fitted,
        },
        "weather_knn": {
            "features": context.knn.features.tolist(),
            "severities": context.knn.severities.tolist(),
            "mean": context.knn.mean.tolist(),
            "std": context.knn.std.tolist(),
            "k": context.knn.k,
        },
        "clusters": {
            "lats": context.clusters.lats.tolist(),
            "lons": context.clusters.lons.tolist(),
            "densities": context.clusters.densities.tolist(),
            "eps_km": context.clusters.eps_km,
        },
        "cluster_params": {
            "eps_km": context.cluster_params.eps_km,
            "min_samples": context.cluster_params.min_samples,
            "adaptive": context.cluster_params.adaptive,
            "adapt_bounds": list(context.cluster_params.adapt_bounds),
            "adapt_resolution": context.cluster_params.adapt_resolution,
        },
    }


def context_from_dict(d: dict) -> FeatureContext:
    if d.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} document")
    if int(d.get("version", -1)) > FORMAT_VERSION:
        raise ValueError(f"unsupported feature-context version {d.get('version')}")
    b = d["behavioral"]
    e = d["environmental"]
    k = d["weather_knn"]
    c = d["clusters"]
    p = d["cluster_params"]
    return FeatureContext(
        behavioral=BehavioralRiskWeights(tuple(b["impairment"]), tuple(b["distraction"])),
        environmental=EnvironmentalRiskWeights(
            alpha=e["alpha"], beta=e["beta"], gamma=e["gamma"],
            road_component=tuple(e["road_component"]), compound=tuple(e["compound"]),
            fitted=bool(e["fitted"]),
        ),
        knn=WeatherKnnModel(
            features=np.asarray(k["features"], dtype=float).reshape(-1, 4),
            severities=np.asarray(k["severities"], dtype=int),
            mean=np.asarray(k["mean"], dtype=float),
            std=np.asarray(k["std"], dtype=float),
            k=int(k["k"]),
        ),
        clusters=ClusterModel(
            lats=np.asarray(c["lats"], dtype=float),
            lons=np.asarray(c["lons"], dtype=float),
            densities=np.asarray(c["densities"], dtype=float),
            eps_km=float(c["eps_km"]),
        ),
        cluster_params=ClusterParams(
            eps_km=float(p["eps_km"]),
            min_samples=int(p["min_samples"]),
            adaptive=bool(p["adaptive"]),
            adapt_bounds=tuple(p["adapt_bounds"]),
            adapt_resolution=int(p["adapt_resolution"]),
        ),
    )


def save_context(context: FeatureContext, path: str | Path) -> None:
    Path(path).write_text(json.dumps(context_to_dict(context)))


def load_context(path: str | Path) -> FeatureContext:
    return context_from_dict(json.loads(Path(path).read_text()))
