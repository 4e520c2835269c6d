"""Adaptive statistical-process-control validation.

Control limits are fitted per jurisdiction group as mean +/- k*sigma over
the numeric fields; groups too small for stable statistics fall back to
the global limits. Validation never throws on bad records: every rejection
is tallied under exactly one reason so counts always reconcile.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from ..core import CrashRecord

MONITORED_FIELDS = ("DEC_LAT", "DEC_LONG", "HOUR_OF_DAY")

# Pennsylvania-style service area; configurable per deployment.
DEFAULT_BBOX = (39.5, 42.5, -80.6, -74.6)  # min_lat, max_lat, min_lon, max_lon

REJECTION_REASONS = (
    "missing_critical",
    "severity_ambiguous",
    "coordinate_inconsistent",
    "control_limit_violation",
)


class EmptyInput(ValueError):
    pass


def _field_value(record: CrashRecord, name: str) -> Optional[float]:
    if name == "DEC_LAT":
        return record.location.lat if record.location else None
    if name == "DEC_LONG":
        return record.location.lon if record.location else None
    if name == "HOUR_OF_DAY":
        return float(record.hour_of_day) if record.hour_of_day is not None else None
    raise KeyError(name)


@dataclass(frozen=True)
class ControlLimit:
    mean: float
    sigma: float
    k: float

    @property
    def low(self) -> float:
        return self.mean - self.k * self.sigma

    @property
    def high(self) -> float:
        return self.mean + self.k * self.sigma

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


@dataclass
class QualityThresholds:
    k: float
    group_by: str
    global_limits: dict[str, ControlLimit]
    group_limits: dict[str, dict[str, ControlLimit]]
    small_groups: set[str] = field(default_factory=set)

    def limits_for(self, group: str) -> dict[str, ControlLimit]:
        if group in self.group_limits:
            return self.group_limits[group]
        return self.global_limits


def _fit_limits(values: list[float], k: float) -> Optional[ControlLimit]:
    if not values:
        return None
    arr = np.sort(np.asarray(values, dtype=float))  # order-independent stats
    mean = float(arr.mean())
    sigma = float(arr.std(ddof=1)) if arr.shape[0] > 1 else 0.0
    return ControlLimit(mean=mean, sigma=sigma, k=k)


def fit_adaptive_thresholds(
    records: Sequence[CrashRecord],
    k: float = 3.0,
    group_by: str = "COUNTY",
    min_group: int = 30,
) -> QualityThresholds:
    """Per-group control limits over the monitored numeric fields."""
    if not records:
        raise EmptyInput("no records to fit thresholds on")

    groups: dict[str, list[CrashRecord]] = {}
    for r in records:
        groups.setdefault(r.county if group_by == "COUNTY" else getattr(r, group_by.lower()), []).append(r)

    global_limits = {}
    for name in MONITORED_FIELDS:
        limit = _fit_limits([v for r in records if (v := _field_value(r, name)) is not None], k)
        if limit is not None:
            global_limits[name] = limit

    group_limits: dict[str, dict[str, ControlLimit]] = {}
    small_groups: set[str] = set()
    for group, members in groups.items():
        if len(members) < min_group:
            small_groups.add(group)
            continue
        limits = {}
        for name in MONITORED_FIELDS:
            limit = _fit_limits([v for r in members if (v := _field_value(r, name)) is not None], k)
            if limit is not None:
                limits[name] = limit
        group_limits[group] = limits

    return QualityThresholds(
        k=k, group_by=group_by, global_limits=global_limits,
        group_limits=group_limits, small_groups=small_groups,
    )


@dataclass
class ValidationReport:
    input_count: int
    retained_count: int
    rejection_reasons: dict[str, int]
    retention_rate: float

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "retained_count": self.retained_count,
            "rejection_reasons": dict(self.rejection_reasons),
            "retention_rate": self.retention_rate,
        }


def validate_batch(
    records: Iterable[CrashRecord],
    thresholds: QualityThresholds,
    bbox: tuple[float, float, float, float] = DEFAULT_BBOX,
) -> tuple[list[CrashRecord], ValidationReport]:
    """Partition records into retained and rejected-with-reason.

    Each rejected record counts under its first failing check, in order:
    missing critical field, ambiguous severity, coordinates outside the
    service box, monitored value outside group control limits.
    """
    min_lat, max_lat, min_lon, max_lon = bbox
    retained: list[CrashRecord] = []
    reasons = {name: 0 for name in REJECTION_REASONS}
    n = 0
    for record in records:
        n += 1
        if record.location is None or record.occurred_at is None:
            reasons["missing_critical"] += 1
            continue
        if record.severity is None:
            reasons["severity_ambiguous"] += 1
            continue
        loc = record.location
        if not (min_lat <= loc.lat <= max_lat and min_lon <= loc.lon <= max_lon):
            reasons["coordinate_inconsistent"] += 1
            continue
        limits = thresholds.limits_for(record.county)
        violated = False
        for name, limit in limits.items():
            value = _field_value(record, name)
            if value is not None and not limit.contains(value):
                violated = True
                break
        if violated:
            reasons["control_limit_violation"] += 1
            continue
        retained.append(record)

    report = ValidationReport(
        input_count=n,
        retained_count=len(retained),
        rejection_reasons=reasons,
        retention_rate=(len(retained) / n) if n else 1.0,
    )
    return retained, report
