"""Behavioral and environmental risk scores.

Weighted-sum scores are clipped to [0, 1]; the compound environmental
score mixes the weather-category risk with the road-surface score, and the
three-component score E = alpha*W + beta*R + gamma*V carries weights fitted
from history by a constrained logistic regression.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ..core import CrashRecord


class LengthMismatch(ValueError):
    pass


class ComponentOutOfRange(ValueError):
    pass


class DegenerateDesign(ValueError):
    """Fitting inputs carry no usable signal (constant column or outcome)."""


@dataclass(frozen=True)
class BehavioralRiskWeights:
    impairment: tuple[float, float, float] = (0.4, 0.4, 0.2)  # alcohol, drugged, marijuana
    distraction: tuple[float, float, float] = (0.3, 0.4, 0.3)  # cell phone, distracted, fatigue

    def __post_init__(self) -> None:
        for name, ws in (("impairment", self.impairment), ("distraction", self.distraction)):
            if abs(sum(ws) - 1.0) > 1e-9:
                raise ValueError(f"{name} weights must sum to 1")


WEATHER_RISK_MAP = {
    "1": 0.2,  # Clear
    "2": 0.4,  # Cloudy
    "3": 0.6,  # Rain
    "4": 0.8,  # Snow
    "5": 0.9,  # Sleet/Hail
    "6": 0.7,  # Fog
}
WEATHER_RISK_DEFAULT = 0.2


@dataclass(frozen=True)
class EnvironmentalRiskWeights:
    alpha: float = 1.0 / 3.0  # weather
    beta: float = 1.0 / 3.0  # road
    gamma: float = 1.0 / 3.0  # visibility
    road_component: tuple[float, float, float] = (0.4, 0.3, 0.3)  # icy, wet, snow/slush
    compound: tuple[float, float] = (0.6, 0.4)  # weather, road
    fitted: bool = False

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("component weights must be nonnegative")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise ValueError("alpha + beta + gamma must sum to 1")


def weighted_risk(flags: Sequence[float], weights: Sequence[float]) -> float:
    """Dot product of binary flags and weights, clipped to [0, 1].
    Missing flags must already be resolved to 0 by the imputation stage."""
    if len(flags) != len(weights):
        raise LengthMismatch(f"{len(flags)} flags vs {len(weights)} weights")
    value = float(np.dot(np.asarray(flags, dtype=float), np.asarray(weights, dtype=float)))
    return min(1.0, max(0.0, value))


def weather_category_risk(category: Optional[str]) -> float:
    if category is None:
        return WEATHER_RISK_DEFAULT
    return WEATHER_RISK_MAP.get(str(category), WEATHER_RISK_DEFAULT)


def _flag01(record: CrashRecord, name: str) -> float:
    v = record.flags.get(name)
    return float(v) if v is not None else 0.0


def environmental_features(record: CrashRecord,
                           weights: EnvironmentalRiskWeights = EnvironmentalRiskWeights()
                           ) -> tuple[float, float, float]:
    """(adverse_road, weather_risk, total) for one record."""
    wi, ww, ws = weights.road_component
    adverse_road = min(1.0, max(0.0,
        wi * _flag01(record, "ICY_ROAD")
        + ww * _flag01(record, "WET_ROAD")
        + ws * _flag01(record, "SNOW_SLUSH_ROAD")))
    w_risk = weather_category_risk(record.codes.get("WEATHER1"))
    cw, cr = weights.compound
    total = min(1.0, max(0.0, cw * w_risk + cr * adverse_road))
    return adverse_road, w_risk, total


def visibility_factor(visibility_km: float) -> float:
    """Risk contribution of low visibility; 10 km and beyond count as clear."""
    return min(1.0, max(0.0, 1.0 - visibility_km / 10.0))


def combine_environmental(weather_risk: float, road_risk: float, vis_factor: float,
                          weights: EnvironmentalRiskWeights) -> float:
    """alpha*W + beta*R + gamma*V with all components checked into [0, 1]."""
    for name, v in (("weather", weather_risk), ("road", road_risk), ("visibility", vis_factor)):
        if not 0.0 <= v <= 1.0:
            raise ComponentOutOfRange(f"{name} component {v} outside [0, 1]")
    return weights.alpha * weather_risk + weights.beta * road_risk + weights.gamma * vis_factor


def environmental_risk_E(weather_snapshot, road_risk: float,
                         vis_factor: Optional[float] = None,
                         weights: EnvironmentalRiskWeights = EnvironmentalRiskWeights()) -> float:
    """Three-component environmental risk for a live weather observation."""
    w = weather_category_risk(weather_snapshot.category)
    v = visibility_factor(weather_snapshot.visibility_km) if vis_factor is None else vis_factor
    return combine_environmental(w, road_risk, v, weights)


def _logistic_fit(X: np.ndarray, y: np.ndarray, max_iter: int = 100, tol: float = 1e-10) -> np.ndarray:
    """Newton iterations on the (intercept-augmented) logistic likelihood."""
    n, d = X.shape
    Z = np.hstack([np.ones((n, 1)), X])
    beta = np.zeros(d + 1)
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(-(Z @ beta)))
        grad = Z.T @ (y - p)
        W = p * (1.0 - p)
        H = (Z * W[:, None]).T @ Z + 1e-8 * np.eye(d + 1)
        step = np.linalg.solve(H, grad)
        beta += step
        if float(np.abs(step).max()) < tol:
            break
    return beta


def fit_environmental_weights(records: Sequence[CrashRecord],
                              components: Optional[np.ndarray] = None,
                              min_records: int = 500) -> EnvironmentalRiskWeights:
    """Fit (alpha, beta, gamma) on 1{severity >= SERIOUS} outcomes.

    components may supply precomputed (W, R, V) columns; otherwise they are
    derived from each record. Coefficients are projected to nonnegative and
    normalized to sum 1 (uniform if the projection zeroes everything).
    """
    if len(records) < min_records:
        raise ValueError(f"need at least {min_records} records, got {len(records)}")
    labeled = [r for r in records if r.severity is not None]
    y = np.array([1.0 if int(r.severity) >= 2 else 0.0 for r in labeled])
    if components is None:
        from .weather_knn import archetype_snapshot  # local import to avoid a cycle

        rows = []
        for r in labeled:
            adverse_road, w_risk, _ = environmental_features(r)
            snap = archetype_snapshot(r.codes.get("WEATHER1") or "1",
                                      r.crash_month or 6, r.hour_of_day or 12,
                                      r.occurred_at)
            rows.append((w_risk, adverse_road, visibility_factor(snap.visibility_km)))
        X = np.asarray(rows)
    else:
        X = np.asarray(components, dtype=float)

    if y.min() == y.max():
        raise DegenerateDesign("outcome is constant")
    if np.any(X.max(axis=0) - X.min(axis=0) < 1e-12):
        raise DegenerateDesign("a component column is constant")

    beta = _logistic_fit(X, y)
    coefs = np.clip(beta[1:], 0.0, None)
    total = coefs.sum()
    if total <= 0:
        coefs = np.full(3, 1.0 / 3.0)
    else:
        coefs = coefs / total
    return replace(EnvironmentalRiskWeights(), alpha=float(coefs[0]), beta=float(coefs[1]),
                   gamma=float(coefs[2]), fitted=True)
