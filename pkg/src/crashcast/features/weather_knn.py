"""Weather-space nearest-neighbor risk.

Standardizes (temperature, precipitation, visibility, wind) over a history
of labeled observations and scores a query as the inverse-distance-weighted
mean of its k nearest neighbors' severities (scaled to [0, 1]).

Records carry only a weather category, so offline history is built from
per-category archetype conditions modulated by month and hour; live
snapshots slot into the same space at serve time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from ..core import SeverityLevel, WeatherSnapshot


class EmptyHistory(ValueError):
    pass


# per category: base temperature C, precip mm/hr, visibility km, wind km/h
_ARCHETYPES = {
    "1": (18.0, 0.0, 14.0, 8.0),   # Clear
    "2": (14.0, 0.0, 10.0, 12.0),  # Cloudy
    "3": (12.0, 6.0, 6.0, 18.0),   # Rain
    "4": (-3.0, 3.0, 3.0, 22.0),   # Snow
    "5": (-1.0, 5.0, 2.5, 25.0),   # Sleet/Hail
    "6": (8.0, 0.3, 0.8, 5.0),     # Fog
}
_SEASONAL_TEMP_AMPLITUDE = 12.0
_NIGHT_TEMP_DROP = 3.0


def archetype_snapshot(category: str, month: int, hour: int,
                       observed_at: Optional[datetime] = None) -> WeatherSnapshot:
    """Canonical conditions for a weather category at a given month/hour."""
    base = _ARCHETYPES.get(str(category), _ARCHETYPES["1"])
    temp = base[0] + _SEASONAL_TEMP_AMPLITUDE * math.cos(2.0 * math.pi * (month - 7) / 12.0)
    if hour < 6 or hour >= 19:
        temp -= _NIGHT_TEMP_DROP
    return WeatherSnapshot(
        category=str(category),
        temperature_c=temp,
        precipitation_mm_hr=base[1],
        visibility_km=base[2],
        wind_kmh=base[3],
        observed_at=observed_at or datetime(2023, month, 15, hour, tzinfo=timezone.utc),
    )


def snapshot_features(snapshot: WeatherSnapshot) -> np.ndarray:
    return np.array([
        snapshot.temperature_c,
        snapshot.precipitation_mm_hr,
        snapshot.visibility_km,
        snapshot.wind_kmh,
    ])


@dataclass
class WeatherKnnModel:
    features: np.ndarray  # (n, 4) raw history features
    severities: np.ndarray  # (n,) integer severities
    mean: np.ndarray
    std: np.ndarray
    k: int = 25

    @classmethod
    def fit(cls, history: Sequence[tuple[WeatherSnapshot, SeverityLevel]], k: int = 25) -> "WeatherKnnModel":
        if not history:
            raise EmptyHistory("weather history is empty")
        feats = np.stack([snapshot_features(s) for s, _ in history])
        sev = np.array([int(lvl) for _, lvl in history])
        mean = feats.mean(axis=0)
        std = feats.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return cls(features=feats, severities=sev, mean=mean, std=std, k=k)

    def risk_for(self, snapshot: WeatherSnapshot, k: Optional[int] = None) -> float:
        return weather_knn_risk_model(self, snapshot, k if k is not None else self.k)


def weather_knn_risk_model(model: WeatherKnnModel, query: WeatherSnapshot, k: int) -> float:
    n = model.features.shape[0]
    if n == 0:
        raise EmptyHistory("weather history is empty")
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}, got {k}")
    z_hist = (model.features - model.mean) / model.std
    z_q = (snapshot_features(query) - model.mean) / model.std
    d = np.sqrt(((z_hist - z_q) ** 2).sum(axis=1))
    order = np.lexsort((np.arange(n), d))[:k]  # distance, then history index
    w = 1.0 / (d[order] + 1e-6)
    return float(np.dot(w, model.severities[order] / 3.0) / w.sum())


def weather_knn_risk(query: WeatherSnapshot,
                     history: Sequence[tuple[WeatherSnapshot, SeverityLevel]],
                     k: int = 25) -> float:
    """One-shot form: fit the standardization over `history` and score."""
    model = WeatherKnnModel.fit(history, k=k)
    return weather_knn_risk_model(model, query, k)
