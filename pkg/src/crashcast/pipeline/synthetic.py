"""Synthetic crash-record generator.

Reproduces the shipped dataset's shape: severity marginals with optional
planted per-feature effects, winter/rush-hour oversampling, Gaussian
location mixtures around urban centers, and weather-consistent road and
flag draws. Severity is sampled from a cumulative-logit model whose
intercepts are calibrated per batch, so the requested marginals hold even
when planted effects skew individual records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from ..core import CANONICAL_FLAGS, CrashRecord, GeoPoint, SeverityLevel

# Shipped severity mix of the reference corpus.
REFERENCE_MARGINALS = (0.729, 0.225, 0.036, 0.010)

DEFAULT_CENTERS = (
    (GeoPoint(39.95, -75.17), 0.35),  # Philadelphia
    (GeoPoint(40.44, -80.00), 0.25),  # Pittsburgh
    (GeoPoint(40.60, -75.47), 0.15),  # Allentown
    (GeoPoint(40.27, -76.88), 0.15),  # Harrisburg
    (GeoPoint(42.08, -80.09), 0.10),  # Erie
)

WINTER_MONTHS = (12, 1, 2)
RUSH_HOURS = (7, 8, 16, 17)


@dataclass(frozen=True)
class SyntheticConfig:
    n_records: int
    severity_marginals: tuple[float, float, float, float] = REFERENCE_MARGINALS
    seasonal_peak_months: tuple[int, ...] = WINTER_MONTHS
    rush_hours: tuple[int, ...] = RUSH_HOURS
    cluster_centers: tuple[tuple[GeoPoint, float], ...] = DEFAULT_CENTERS
    seed: int = 0
    planted_effects: dict = field(default_factory=dict)
    location_sigma_deg: float = 0.08
    month_peak_weight: float = 2.2
    hour_peak_weight: float = 2.5

    def __post_init__(self) -> None:
        if abs(sum(self.severity_marginals) - 1.0) > 1e-9:
            raise ValueError("severity marginals must sum to 1")
        if any(w < 0 for _, w in self.cluster_centers):
            raise ValueError("cluster center weights must be nonnegative")


def _categorical(rng: np.random.Generator, probs: np.ndarray, size: int) -> np.ndarray:
    cum = np.cumsum(probs)
    cum /= cum[-1]
    return np.searchsorted(cum, rng.random(size), side="right")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _calibrate_intercept(z: np.ndarray, target: float) -> float:
    """Solve mean(sigmoid(c + z)) = target for c by bisection."""
    lo, hi = -40.0, 40.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if float(_sigmoid(mid + z).mean()) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample_severities(
    z: np.ndarray,
    marginals: Sequence[float],
    rng: np.random.Generator,
) -> np.ndarray:
    """Cumulative-logit severity draw: P(sev >= s | z) = sigmoid(c_s + z),
    with c_s calibrated so batch-level marginals match `marginals`."""
    n = z.shape[0]
    tail_targets = [sum(marginals[s:]) for s in (1, 2, 3)]
    intercepts = [_calibrate_intercept(z, t) for t in tail_targets]
    ge = np.stack([np.ones(n)] + [_sigmoid(c + z) for c in intercepts], axis=1)
    # adjacent differences; same z-slope keeps them ordered, clip for safety
    probs = np.clip(ge - np.hstack([ge[:, 1:], np.zeros((n, 1))]), 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    cum = np.cumsum(probs, axis=1)
    u = rng.random(n)
    return (u[:, None] > cum).sum(axis=1)


# Weather category probabilities by season: clear, cloudy, rain, snow, sleet, fog
_WEATHER_WINTER = np.array([0.38, 0.22, 0.10, 0.18, 0.07, 0.05])
_WEATHER_OTHER = np.array([0.55, 0.22, 0.15, 0.0, 0.01, 0.07])


def generate_synthetic(config: SyntheticConfig) -> list[CrashRecord]:
    """Draw `n_records` complete records, fully reproducible from the seed."""
    rng = np.random.default_rng(config.seed)
    n = config.n_records

    month_w = np.ones(12)
    for m in config.seasonal_peak_months:
        month_w[m - 1] = config.month_peak_weight
    months = _categorical(rng, month_w / month_w.sum(), n) + 1

    hour_w = np.ones(24)
    for hh in config.rush_hours:
        hour_w[hh] = config.hour_peak_weight
    hours = _categorical(rng, hour_w / hour_w.sum(), n)

    days = rng.integers(1, 29, size=n)
    minutes = rng.integers(0, 60, size=n)

    weights = np.array([w for _, w in config.cluster_centers], dtype=float)
    center_idx = _categorical(rng, weights / weights.sum(), n)
    lat0 = np.array([c.lat for c, _ in config.cluster_centers])
    lon0 = np.array([c.lon for c, _ in config.cluster_centers])
    lats = np.clip(lat0[center_idx] + rng.normal(0, config.location_sigma_deg, n), -90.0, 90.0)
    lons = np.clip(lon0[center_idx] + rng.normal(0, config.location_sigma_deg, n), -180.0, 180.0)

    winter = np.isin(months, WINTER_MONTHS)
    weather = np.empty(n, dtype=int)
    u_weather = rng.random(n)
    for season_mask, table in ((winter, _WEATHER_WINTER), (~winter, _WEATHER_OTHER)):
        if season_mask.any():
            cum = np.cumsum(table / table.sum())
            weather[season_mask] = np.searchsorted(cum, u_weather[season_mask], side="right")
    weather += 1  # codes "1".."6"

    dark = (hours < 6) | (hours >= 19)
    illum = np.where(dark, np.where(rng.random(n) < 0.55, 3, 2), 1)

    # road condition follows weather: 1 dry, 2 wet, 3 snow-covered, 4 icy
    road = np.ones(n, dtype=int)
    r = rng.random(n)
    road[(weather == 3) & (r < 0.8)] = 2
    road[(weather == 4) & (r < 0.7)] = 3
    road[(weather == 5) & (r < 0.6)] = 4

    flag_probs = {
        "ALCOHOL_RELATED": np.where(dark, 0.12, 0.05),
        "DRUGGED_DRIVER": np.full(n, 0.04),
        "MARIJUANA_RELATED": np.full(n, 0.03),
        "CELL_PHONE": np.full(n, 0.06),
        "DISTRACTED": np.full(n, 0.14),
        "FATIGUE_ASLEEP": np.where(dark, 0.08, 0.03),
        "ICY_ROAD": np.where((road == 4) | ((weather == 5) & winter), 0.85, np.where(winter, 0.06, 0.005)),
        "WET_ROAD": np.where(weather == 3, 0.85, 0.08),
        "SNOW_SLUSH_ROAD": np.where(road == 3, 0.9, np.where(winter, 0.08, 0.002)),
        "AGGRESSIVE_DRIVING": np.where(np.isin(hours, config.rush_hours), 0.22, 0.12),
        "LOCAL_ROAD": np.full(n, 0.45),
        "UNBELTED": np.full(n, 0.10),
        "CURVE_DVR_ERROR": np.full(n, 0.07),
        "INTERSTATE": np.full(n, 0.18),
        "INTERSECTION_RELATED": np.full(n, 0.28),
    }
    flags = {name: (rng.random(n) < p).astype(int) for name, p in flag_probs.items()}

    z = np.zeros(n)
    for feature, shift in config.planted_effects.items():
        if feature in flags:
            z += shift * flags[feature]
        elif feature.startswith("WEATHER1="):
            z += shift * (weather == int(feature.split("=")[1]))
        else:
            raise KeyError(f"unknown planted-effect feature: {feature}")
    severities = sample_severities(z, config.severity_marginals, rng)

    records = []
    for i in range(n):
        records.append(
            CrashRecord(
                id=f"S{i:07d}",
                location=GeoPoint(float(lats[i]), float(lons[i])),
                occurred_at=datetime(2023, int(months[i]), int(days[i]), int(hours[i]),
                                     int(minutes[i]), tzinfo=timezone.utc),
                hour_of_day=int(hours[i]),
                crash_month=int(months[i]),
                severity=SeverityLevel(int(severities[i])),
                county=f"C{int(center_idx[i]):02d}",
                flags={name: int(flags[name][i]) for name in CANONICAL_FLAGS},
                codes={
                    "WEATHER1": str(int(weather[i])),
                    "ILLUMINATION": str(int(illum[i])),
                    "ROAD_CONDITION": str(int(road[i])),
                },
            )
        )
    return records


def training_config(n_records: int = 20000, seed: int = 7) -> SyntheticConfig:
    """Generator preset with strong planted effects, used for model-skill
    checks and demo training runs."""
    # Escalation-quantum effects: major factors shift severity log-odds in
    # multiples of ~7 so conditional severities concentrate per band; the
    # marginals match the resulting band masses, keeping calibrated
    # intercepts inside the gaps between bands.
    return SyntheticConfig(
        n_records=n_records,
        severity_marginals=(0.553, 0.244, 0.109, 0.094),
        seed=seed,
        planted_effects={
            "ICY_ROAD": 21.0,
            "ALCOHOL_RELATED": 14.0,
            "DRUGGED_DRIVER": 14.0,
            "UNBELTED": 7.0,
            "AGGRESSIVE_DRIVING": 7.0,
            "FATIGUE_ASLEEP": 7.0,
            "SNOW_SLUSH_ROAD": 7.0,
            "WEATHER1=5": 7.0,
            "WET_ROAD": 0.8,
            "CELL_PHONE": 0.6,
            "DISTRACTED": 0.4,
            "CURVE_DVR_ERROR": 0.5,
            "INTERSTATE": -0.7,
            "LOCAL_ROAD": 0.3,
            "WEATHER1=4": 0.8,
            "WEATHER1=6": 0.4,
        },
    )


def plant_defects(records: Sequence[CrashRecord], fraction: float, seed: int) -> list[CrashRecord]:
    """Corrupt a fraction of records (missing severity, missing location, or
    out-of-area coordinates) for validation exercises."""
    rng = np.random.default_rng(seed)
    out = list(records)
    n_defects = int(round(fraction * len(out)))
    picks = rng.choice(len(out), size=n_defects, replace=False) if n_defects else []
    for i in picks:
        kind = rng.integers(0, 3)
        if kind == 0:
            out[i] = replace(out[i], severity=None)
        elif kind == 1:
            out[i] = replace(out[i], location=None)
        else:
            out[i] = replace(out[i], location=GeoPoint(0.0, 0.0))
    return out


def plant_missing_flags(records: Sequence[CrashRecord], fraction: float, seed: int,
                        fields: Optional[Sequence[str]] = None) -> list[CrashRecord]:
    """Blank a fraction of flag/code cells (uniformly over cells) so the
    imputation stage has work to do."""
    fields = tuple(fields) if fields is not None else CANONICAL_FLAGS
    rng = np.random.default_rng(seed)
    out = list(records)
    cells = [(i, f) for i in range(len(out)) for f in fields]
    n_masked = int(round(fraction * len(cells)))
    picks = rng.choice(len(cells), size=n_masked, replace=False) if n_masked else []
    by_row: dict[int, list[str]] = {}
    for k in picks:
        i, name = cells[k]
        by_row.setdefault(i, []).append(name)
    for i, names in by_row.items():
        r = out[i]
        flags = dict(r.flags)
        codes = dict(r.codes)
        for name in names:
            if name in flags:
                flags[name] = None
            else:
                codes[name] = None
        out[i] = replace(r, flags=flags, codes=codes)
    return out
