"""Replayable weather source.

A CSV timeline stands in for a live provider behind the same lookup
interface: the snapshot for time t is the latest observation at or before
t within the retention window (24 hours by default).
"""

from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from ..core import WEATHER_CATEGORIES, WeatherSnapshot
from ..features.weather_knn import archetype_snapshot


class WeatherSourceUnavailable(RuntimeError):
    pass


FIXTURE_COLUMNS = ("OBSERVED_AT", "WEATHER1", "TEMPERATURE_C",
                   "PRECIPITATION_MM_HR", "VISIBILITY_KM", "WIND_KMH")


@dataclass
class FixtureWeatherSource:
    times: list[datetime]
    snapshots: list[WeatherSnapshot]
    window: timedelta = timedelta(hours=24)

    @classmethod
    def from_csv(cls, path: str | Path, window_hours: float = 24.0) -> "FixtureWeatherSource":
        times: list[datetime] = []
        snaps: list[WeatherSnapshot] = []
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                t = datetime.fromisoformat(row["OBSERVED_AT"].replace("Z", "+00:00"))
                if t.tzinfo is None:
                    t = t.replace(tzinfo=timezone.utc)
                snaps.append(WeatherSnapshot(
                    category=row["WEATHER1"].strip(),
                    temperature_c=float(row["TEMPERATURE_C"]),
                    precipitation_mm_hr=float(row["PRECIPITATION_MM_HR"]),
                    visibility_km=float(row["VISIBILITY_KM"]),
                    wind_kmh=float(row["WIND_KMH"]),
                    observed_at=t,
                ))
                times.append(t)
        order = sorted(range(len(times)), key=lambda i: times[i])
        return cls(times=[times[i] for i in order],
                   snapshots=[snaps[i] for i in order],
                   window=timedelta(hours=window_hours))

    def at(self, t: datetime) -> Optional[WeatherSnapshot]:
        """Latest snapshot observed at or before t within the window."""
        if not self.times:
            return None
        i = bisect.bisect_right(self.times, t) - 1
        if i < 0:
            return None
        if t - self.times[i] > self.window:
            return None
        return self.snapshots[i]

    def require_at(self, t: datetime) -> WeatherSnapshot:
        snap = self.at(t)
        if snap is None:
            raise WeatherSourceUnavailable(f"no observation within window at {t.isoformat()}")
        return snap


def write_weather_fixture(path: str | Path, start: datetime, hours: int,
                          seed: int = 0, step_minutes: int = 30) -> None:
    """Synthesize a plausible fixture timeline (persistent categories with
    occasional transitions, numerics from the per-category archetypes)."""
    rng = np.random.default_rng(seed)
    cat_idx = int(rng.integers(0, len(WEATHER_CATEGORIES)))
    rows = []
    steps = int(hours * 60 / step_minutes)
    t = start
    for _ in range(steps):
        if rng.random() < 0.12:
            cat_idx = int(rng.integers(0, len(WEATHER_CATEGORIES)))
        category = WEATHER_CATEGORIES[cat_idx]
        base = archetype_snapshot(category, t.month, t.hour, t)
        rows.append([
            t.isoformat(),
            category,
            repr(round(base.temperature_c + float(rng.normal(0, 1.5)), 2)),
            repr(round(max(0.0, base.precipitation_mm_hr + float(rng.normal(0, 0.4))), 2)),
            repr(round(max(0.1, base.visibility_km + float(rng.normal(0, 0.8))), 2)),
            repr(round(max(0.0, base.wind_kmh + float(rng.normal(0, 2.5))), 2)),
        ])
        t = t + timedelta(minutes=step_minutes)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIXTURE_COLUMNS)
        writer.writerows(rows)
