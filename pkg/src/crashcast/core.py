"""Canonical record schema, severity levels, and geographic primitives.

Everything downstream (pipeline, features, serving) shares these types.
All types are immutable after construction and safe to share across tasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import IntEnum
from typing import Optional

EARTH_RADIUS_KM = 6371.0

# Canonical binary risk flags, UPPER_SNAKE_CASE. Ingestion normalizes
# header case so mixed-case source columns land on these names.
CANONICAL_FLAGS = (
    "ALCOHOL_RELATED",
    "DRUGGED_DRIVER",
    "MARIJUANA_RELATED",
    "CELL_PHONE",
    "DISTRACTED",
    "FATIGUE_ASLEEP",
    "ICY_ROAD",
    "WET_ROAD",
    "SNOW_SLUSH_ROAD",
    "AGGRESSIVE_DRIVING",
    "LOCAL_ROAD",
    "UNBELTED",
    "CURVE_DVR_ERROR",
    "INTERSTATE",
    "INTERSECTION_RELATED",
)

# Categorical code columns. Values are kept as canonical strings
# ("1".."6" for WEATHER1, small integers as strings for the rest).
CANONICAL_CODES = ("WEATHER1", "ILLUMINATION", "ROAD_CONDITION")

# Flags describing driver behavior; these count as critical fields for the
# high-missingness exclusion rule and group under the "behavioral" factor.
BEHAVIORAL_FLAGS = (
    "ALCOHOL_RELATED",
    "DRUGGED_DRIVER",
    "MARIJUANA_RELATED",
    "CELL_PHONE",
    "DISTRACTED",
    "FATIGUE_ASLEEP",
    "AGGRESSIVE_DRIVING",
    "UNBELTED",
)

WEATHER_CATEGORIES = ("1", "2", "3", "4", "5", "6")
WEATHER_CATEGORY_NAMES = {
    "1": "Clear",
    "2": "Cloudy",
    "3": "Rain",
    "4": "Snow",
    "5": "Sleet/Hail",
    "6": "Fog",
}

# CSV external format: header row required, this column order when writing;
# reading is order-insensitive. Missing value = empty field.
CSV_COLUMNS = (
    "ID",
    "DEC_LAT",
    "DEC_LONG",
    "CRASH_DATETIME",
    "HOUR_OF_DAY",
    "CRASH_MONTH",
    "SEVERITY",
    "COUNTY",
) + CANONICAL_FLAGS + CANONICAL_CODES


class OutOfRangeSeverity(ValueError):
    """Severity code outside {0, 1, 2, 3}."""


class SeverityLevel(IntEnum):
    MINOR = 0
    MODERATE = 1
    SERIOUS = 2
    FATAL = 3


def parse_severity(code: int) -> SeverityLevel:
    """Map an integer code 0-3 onto a severity level; anything else raises."""
    if not isinstance(code, int) or isinstance(code, bool) or code not in (0, 1, 2, 3):
        raise OutOfRangeSeverity(f"severity code must be 0..3, got {code!r}")
    return SeverityLevel(code)


@dataclass(frozen=True)
class GeoPoint:
    """WGS84-style latitude/longitude pair in degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError("GeoPoint coordinates must be finite")
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon}")


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km between two points (sphere, R=6371.0)."""
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    s = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))


@dataclass(frozen=True)
class WeatherSnapshot:
    """One observation of ambient conditions."""

    category: str  # WEATHER1 code "1".."6"
    temperature_c: float
    precipitation_mm_hr: float
    visibility_km: float
    wind_kmh: float
    observed_at: datetime

    def __post_init__(self) -> None:
        if self.precipitation_mm_hr < 0 or self.visibility_km < 0 or self.wind_kmh < 0:
            raise ValueError("precipitation, visibility, and wind must be nonnegative")


@dataclass(frozen=True)
class CrashRecord:
    """One crash event.

    Location, timestamp, and severity may be absent on freshly ingested
    rows; the validation stage rejects such records. Flag values are
    tri-state (0, 1, or None) until imputation fills them; they are never
    silently coerced to 0 because imputation accuracy is measured against
    the explicit missing state.
    """

    id: str
    location: Optional[GeoPoint]
    occurred_at: Optional[datetime]
    hour_of_day: Optional[int]
    crash_month: Optional[int]
    severity: Optional[SeverityLevel]
    county: str = ""
    flags: dict = field(default_factory=dict)
    codes: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.hour_of_day is not None and not 0 <= self.hour_of_day <= 23:
            raise ValueError(f"hour_of_day out of range: {self.hour_of_day}")
        if self.crash_month is not None and not 1 <= self.crash_month <= 12:
            raise ValueError(f"crash_month out of range: {self.crash_month}")
        if self.occurred_at is not None and self.occurred_at.tzinfo is None:
            raise ValueError("occurred_at must be timezone-aware (UTC)")
        for name, value in self.flags.items():
            if value not in (0, 1, None):
                raise ValueError(f"flag {name} must be 0, 1, or None, got {value!r}")

    def flag(self, name: str) -> Optional[int]:
        return self.flags.get(name)

    def code(self, name: str) -> Optional[str]:
        return self.codes.get(name)


def utc(year: int, month: int, day: int, hour: int = 0, minute: int = 0, second: int = 0) -> datetime:
    return datetime(year, month, day, hour, minute, second, tzinfo=timezone.utc)
