"""Risk service: ties the model, feature context, caches, store, and weather
source into the prediction/hotspot surface the HTTP layer exposes.

Hot-path requests resolve to a precomputed primary entry keyed by
(serving cell, 15-minute bucket, weather category); what-if requests and
primary misses go through the secondary LRU, and true misses assemble
features and run the ensemble on demand. Cached entries carry their
response pre-serialized up to the cache-tier field, so a hit only appends
the tier and measured latency.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from ..cells import CellId, cell_bounds, cell_center, cell_of
from ..core import CANONICAL_FLAGS, CrashRecord, GeoPoint, WeatherSnapshot
from ..boosting.attribution import attribute_prediction, grouped_factor_shares
from ..boosting.ensemble import EnsembleModel, UnfittedModel, bucket_for
from ..evaluation import DriftMonitorState, drift_update
from ..features.assemble import (
    FEATURE_NAMES,
    FeatureContext,
    assemble_feature_vector,
    factor_group_indices,
)
from ..features.risk import environmental_risk_E
from ..features.weather_knn import archetype_snapshot
from ..pipeline.quality import DEFAULT_BBOX
from .cache import CacheEntry, PrimaryCache, SecondaryCacheConfig, SecondaryLRU
from .recommend import load_recommendation_table, recommend_actions, risk_tier
from .store import CrashStore
from .weather import FixtureWeatherSource, WeatherSourceUnavailable


class BadRequest(ValueError):
    """Maps to HTTP 400."""


class UnprocessableRequest(ValueError):
    """Maps to HTTP 422 (coordinates outside the service area)."""


TIME_BUCKET_SECONDS = 900  # 15 minutes, aligned to the hour


@dataclass
class ServiceConfig:
    serving_resolution: int = 7
    store_resolution: int = 8
    refresh_minutes: float = 15.0
    secondary_capacity: int = 2048
    pin_confidence: float = 0.9
    pin_fraction_max: float = 0.10
    bbox: tuple = DEFAULT_BBOX
    recommendations_path: Optional[str] = None
    hotspot_radius_base_m: float = 1000.0
    latency_window: int = 8192
    drift_window: int = 1000
    drift_baseline_accuracy: float = 0.9
    drift_baseline_sigma: float = 0.01
    drift_sample_per_post: int = 100

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}  # noqa: C416
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "bbox" in doc:
            doc["bbox"] = tuple(doc["bbox"])
        return cls(**doc)


def _time_bucket(at: datetime) -> int:
    return int(at.timestamp() // TIME_BUCKET_SECONDS)


def illumination_for_hour(hour: int) -> str:
    return "1" if 6 <= hour < 19 else "3"


_ROAD_FOR_WEATHER = {"1": "1", "2": "1", "3": "2", "4": "3", "5": "4", "6": "1"}


def road_condition_for_weather(category: str) -> str:
    return _ROAD_FOR_WEATHER.get(category, "1")


def _parse_iso(value: str) -> datetime:
    dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


class RiskService:
    def __init__(
        self,
        model: EnsembleModel,
        context: FeatureContext,
        store: CrashStore,
        weather: FixtureWeatherSource,
        config: Optional[ServiceConfig] = None,
        clock: Callable[[], float] = time.time,
    ):
        if model is None:
            raise UnfittedModel("service needs a fitted model")
        self.model = model
        self.context = context
        self.store = store
        self.weather = weather
        self.config = config or ServiceConfig()
        self.clock = clock
        self.primary = PrimaryCache()
        self.secondary = SecondaryLRU(SecondaryCacheConfig(
            capacity=self.config.secondary_capacity,
            pin_confidence=self.config.pin_confidence,
            pin_fraction_max=self.config.pin_fraction_max,
        ))
        self.groups = factor_group_indices()
        self.recommendations = load_recommendation_table(self.config.recommendations_path)
        self.counters = {"total": 0, "primary": 0, "secondary": 0, "miss": 0}
        self.latencies_ms: list[float] = []
        self.drift = DriftMonitorState(
            window_size=self.config.drift_window,
            baseline_accuracy=self.config.drift_baseline_accuracy,
            baseline_sigma=self.config.drift_baseline_sigma,
        )
        self.last_refresh: Optional[datetime] = None

    # ------------------------------------------------------------ helpers

    def now(self) -> datetime:
        return datetime.fromtimestamp(self.clock(), tz=timezone.utc)

    def _snapshot_for(self, at: datetime, category_hint: Optional[str] = None) -> WeatherSnapshot:
        snap = self.weather.at(at)
        if snap is None:
            snap = archetype_snapshot(category_hint or "1", at.month, at.hour, at)
        return snap

    def _query_record(self, point: GeoPoint, at: datetime, snapshot: WeatherSnapshot,
                      flags_override: Optional[dict]) -> CrashRecord:
        flags = {name: 0 for name in CANONICAL_FLAGS}
        if flags_override:
            flags.update(flags_override)
        return CrashRecord(
            id="query",
            location=point,
            occurred_at=at,
            hour_of_day=at.hour,
            crash_month=at.month,
            severity=None,
            county="",
            flags=flags,
            codes={
                "WEATHER1": snapshot.category,
                "ILLUMINATION": illumination_for_hour(at.hour),
                "ROAD_CONDITION": road_condition_for_weather(snapshot.category),
            },
        )

    def compute_entry(self, point: GeoPoint, at: datetime, snapshot: WeatherSnapshot,
                      flags_override: Optional[dict], key: tuple) -> CacheEntry:
        """Full feature assembly + ensemble prediction + attribution."""
        record = self._query_record(point, at, snapshot, flags_override)
        x = assemble_feature_vector(record, self.context)
        bucket = bucket_for(snapshot.category, at.hour, at.weekday())
        probs, confidence = self.model.predict_one(x, bucket)
        risk = float(1.0 - probs[0])
        explained_cls = 1 + int(np.argmax(probs[1:]))
        attr = attribute_prediction(self.model, x, explained_cls, bucket, self.groups)
        shares = grouped_factor_shares(attr.contributions, self.groups)
        dominant = max(shares.items(), key=lambda kv: (kv[1], kv[0]))[0]
        actions = recommend_actions(risk, dominant, self.recommendations)
        expected_impact = float(np.dot(probs, np.arange(probs.shape[0])))

        features = {name: float(v) for name, v in zip(FEATURE_NAMES, x)}
        features["environmental_risk_E"] = environmental_risk_E(
            snapshot, features["adverse_road_conditions"], None, self.context.environmental)

        core = {
            "risk_score": risk,
            "severity_probs": [float(p) for p in probs],
            "confidence": float(confidence),
            "contributing_factors": shares,
            "dominant_factor": dominant,
            "risk_tier": risk_tier(risk),
            "recommended_actions": actions,
            "expected_impact": expected_impact,
            "features": features,
            "cell": {"resolution": key[0].resolution, "x": key[0].x, "y": key[0].y},
        }
        prefix = json.dumps(core)[:-1].encode("utf-8") + b',"cache_tier":"'
        return CacheEntry(
            key=key,
            risk_score=risk,
            severity_probs=core["severity_probs"],
            contributing_factors=shares,
            recommended_actions=actions,
            confidence=float(confidence),
            features=features,
            payload_prefix=prefix,
        )

    # ------------------------------------------------------------ refresh

    def refresh_primary(self, now: Optional[datetime] = None) -> int:
        """Recompute entries for every active cell under current conditions;
        swap is atomic. On a weather outage the old generation stays and the
        cache is flagged stale."""
        at = now or self.now()
        snap = self.weather.at(at)
        if snap is None:
            self.primary.mark_stale()
            raise WeatherSourceUnavailable(f"no weather at {at.isoformat()}")
        bucket = _time_bucket(at)
        entries = {}
        for cell in self.store.active_cells(self.config.serving_resolution):
            key = (cell, bucket, snap.category)
            entries[key] = self.compute_entry(cell_center(cell), at, snap, None, key)
        self.primary.swap(entries, built_at=self.clock())
        self.last_refresh = at
        return len(entries)

    # ------------------------------------------------------------ predict

    def _parse_predict_body(self, body: dict):
        if not isinstance(body, dict):
            raise BadRequest("body must be a JSON object")
        try:
            loc = body["location"]
            lat = float(loc["lat"])
            lon = float(loc["lon"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BadRequest(f"malformed location: {exc}") from exc
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            raise UnprocessableRequest(f"coordinates off the globe: ({lat}, {lon})")
        min_lat, max_lat, min_lon, max_lon = self.config.bbox
        if not (min_lat <= lat <= max_lat and min_lon <= lon <= max_lon):
            raise UnprocessableRequest(f"coordinates outside service area: ({lat}, {lon})")

        at_raw = body.get("at")
        try:
            at = _parse_iso(at_raw) if at_raw else self.now()
        except ValueError as exc:
            raise BadRequest(f"malformed timestamp: {exc}") from exc

        weather_override = None
        if body.get("weather_override") is not None:
            w = body["weather_override"]
            if not isinstance(w, dict) or "category" not in w:
                raise BadRequest("weather_override needs at least a category")
            category = str(w["category"])
            base = archetype_snapshot(category, at.month, at.hour, at)
            try:
                weather_override = WeatherSnapshot(
                    category=category,
                    temperature_c=float(w.get("temperature_c", base.temperature_c)),
                    precipitation_mm_hr=float(w.get("precipitation_mm_hr", base.precipitation_mm_hr)),
                    visibility_km=float(w.get("visibility_km", base.visibility_km)),
                    wind_kmh=float(w.get("wind_kmh", base.wind_kmh)),
                    observed_at=at,
                )
            except (TypeError, ValueError) as exc:
                raise BadRequest(f"malformed weather_override: {exc}") from exc

        flags_override = None
        if body.get("flags_override") is not None:
            f = body["flags_override"]
            if not isinstance(f, dict):
                raise BadRequest("flags_override must be a map")
            flags_override = {}
            for name, value in f.items():
                if name not in CANONICAL_FLAGS:
                    raise BadRequest(f"unknown flag {name!r}")
                if value not in (0, 1):
                    raise BadRequest(f"flag {name} must be 0 or 1")
                flags_override[name] = int(value)
        return GeoPoint(lat, lon), at, weather_override, flags_override

    def handle_predict(self, body: dict) -> bytes:
        """Serialized PredictionResponse; counters and latency recorded."""
        t0 = time.perf_counter()
        point, at, weather_override, flags_override = self._parse_predict_body(body)
        cell = cell_of(point, self.config.serving_resolution)
        bucket = _time_bucket(at)
        snapshot = weather_override or self._snapshot_for(at)
        category = snapshot.category

        tier = "MISS"
        has_override = weather_override is not None or flags_override is not None
        if not has_override:
            key = (cell, bucket, category)
            entry = self.primary.lookup(key)
            if entry is not None:
                tier = "PRIMARY"
            else:
                entry = self.secondary.get(key, now=self.clock())
                if entry is not None:
                    tier = "SECONDARY"
                else:
                    entry = self.compute_entry(cell_center(cell), at, snapshot, None, key)
                    self.secondary.insert(key, entry, now=self.clock())
        else:
            override_sig = json.dumps(
                {
                    "wc": weather_override.category if weather_override else None,
                    "wt": weather_override.temperature_c if weather_override else None,
                    "wp": weather_override.precipitation_mm_hr if weather_override else None,
                    "wv": weather_override.visibility_km if weather_override else None,
                    "ww": weather_override.wind_kmh if weather_override else None,
                    "f": sorted((flags_override or {}).items()),
                },
                sort_keys=True,
            )
            key = (cell, bucket, category, override_sig)
            entry = self.secondary.get(key, now=self.clock())
            if entry is not None:
                tier = "SECONDARY"
            else:
                entry = self.compute_entry(cell_center(cell), at, snapshot, flags_override, key)
                self.secondary.insert(key, entry, now=self.clock())

        self.counters["total"] += 1
        self.counters[tier.lower()] += 1
        latency_ms = (time.perf_counter() - t0) * 1000.0
        self.latencies_ms.append(latency_ms)
        if len(self.latencies_ms) > self.config.latency_window:
            del self.latencies_ms[: len(self.latencies_ms) - self.config.latency_window]
        return entry.payload_prefix + tier.encode() + b'","latency_ms":' + (
            b"%.3f}" % latency_ms)

    def predict(self, body: dict) -> dict:
        """Dict form of handle_predict, for in-process callers and tests."""
        return json.loads(self.handle_predict(body))

    # ------------------------------------------------------------ hotspots

    def _entry_for_cell(self, cell: CellId, at: datetime) -> CacheEntry:
        """Cache-aware scoring used by hotspot ranking; does not touch the
        request counters."""
        bucket = _time_bucket(at)
        snapshot = self._snapshot_for(at)
        key = (cell, bucket, snapshot.category)
        entry = self.primary.lookup(key)
        if entry is not None:
            return entry
        entry = self.secondary.get(key, now=self.clock())
        if entry is not None:
            return entry
        entry = self.compute_entry(cell_center(cell), at, snapshot, None, key)
        self.secondary.insert(key, entry, now=self.clock())
        return entry

    def hotspots(self, min_lat: float, min_lon: float, max_lat: float, max_lon: float,
                 at: Optional[datetime] = None, k: int = 10) -> list[dict]:
        if min_lat > max_lat or min_lon > max_lon:
            raise BadRequest("malformed bbox: minimums exceed maximums")
        if k < 1:
            raise BadRequest("k must be >= 1")
        at = at or self.now()
        ranked = []
        for cell in self.store.active_cells(self.config.serving_resolution):
            c_min_lat, c_max_lat, c_min_lon, c_max_lon = cell_bounds(cell)
            if c_max_lat < min_lat or c_min_lat > max_lat or c_max_lon < min_lon or c_min_lon > max_lon:
                continue
            entry = self._entry_for_cell(cell, at)
            ranked.append((entry.risk_score, cell, entry))
        ranked.sort(key=lambda t: (-t[0], t[1]))
        out = []
        for risk, cell, entry in ranked[:k]:
            center = cell_center(cell)
            probs = entry.severity_probs
            expected_impact = float(sum(p * s for s, p in enumerate(probs)))
            shares = entry.contributing_factors
            dominant = max(shares.items(), key=lambda kv: (kv[1], kv[0]))[0]
            out.append({
                "cell": {"resolution": cell.resolution, "x": cell.x, "y": cell.y},
                "center": {"lat": center.lat, "lon": center.lon},
                "risk_score": risk,
                "risk_tier": risk_tier(risk),
                "severity_probs": probs,
                "dominant_factor": dominant,
                "expected_impact": expected_impact,
                "display_radius_m": self.config.hotspot_radius_base_m * (risk * expected_impact) ** 0.5,
            })
        return out

    # ------------------------------------------------------------ records

    def ingest_records(self, records: Sequence[CrashRecord]) -> int:
        added = self.store.insert_many(records)
        for record in records[: self.config.drift_sample_per_post]:
            if record.location is None or record.occurred_at is None or record.severity is None:
                continue
            entry = self._entry_for_cell(
                cell_of(record.location, self.config.serving_resolution), record.occurred_at)
            predicted = int(np.argmax(entry.severity_probs))
            drift_update(self.drift, predicted, int(record.severity))
        return added

    # ------------------------------------------------------------ metrics

    def _latency_percentiles(self) -> dict[str, float]:
        if not self.latencies_ms:
            return {"p50": 0.0, "p95": 0.0, "p99": 0.0, "count": 0}
        data = sorted(self.latencies_ms)
        pick = lambda q: data[min(len(data) - 1, int(q * (len(data) - 1)))]  # noqa: E731
        return {"p50": pick(0.50), "p95": pick(0.95), "p99": pick(0.99), "count": len(data)}

    def metrics(self) -> dict:
        return {
            "now": self.now().isoformat(),
            "requests": dict(self.counters),
            "latency_ms": self._latency_percentiles(),
            "cache": {
                "primary_entries": len(self.primary),
                "primary_generation": self.primary.generation,
                "primary_stale": self.primary.stale,
                "secondary_size": len(self.secondary),
                "secondary_pinned": self.secondary.pinned_count,
                "secondary_capacity": self.secondary.config.capacity,
            },
            "drift": self.drift.to_dict(),
            "store_records": len(self.store),
            "last_refresh": self.last_refresh.isoformat() if self.last_refresh else None,
        }
