"""Crash-risk prediction: severity boosting with cached geospatial serving."""

from .core import (
    CANONICAL_CODES,
    CANONICAL_FLAGS,
    EARTH_RADIUS_KM,
    CrashRecord,
    GeoPoint,
    OutOfRangeSeverity,
    SeverityLevel,
    WeatherSnapshot,
    haversine_km,
    parse_severity,
)

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_CODES",
    "CANONICAL_FLAGS",
    "EARTH_RADIUS_KM",
    "CrashRecord",
    "GeoPoint",
    "OutOfRangeSeverity",
    "SeverityLevel",
    "WeatherSnapshot",
    "haversine_km",
    "parse_severity",
]
