"""Feature-matrix file format: CSV with the 19 feature columns plus label
and context metadata (location, weather category, hour, weekday) so
training, resampling, evaluation, and tuning can all work from one file."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..core import CrashRecord
from .assemble import FEATURE_NAMES

META_COLUMNS = ("SEVERITY", "DEC_LAT", "DEC_LONG", "WEATHER1", "HOUR_OF_DAY", "WEEKDAY")


def write_features_csv(
    path: str | Path,
    X: np.ndarray,
    y: np.ndarray,
    records: Optional[Sequence[CrashRecord]] = None,
) -> None:
    X = np.asarray(X)
    y = np.asarray(y, dtype=int)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(FEATURE_NAMES) + list(META_COLUMNS))
        for i in range(X.shape[0]):
            row = [repr(float(v)) for v in X[i]]
            row.append(str(int(y[i])))
            if records is not None:
                r = records[i]
                row.extend([
                    repr(r.location.lat) if r.location else "",
                    repr(r.location.lon) if r.location else "",
                    r.codes.get("WEATHER1") or "",
                    "" if r.hour_of_day is None else str(r.hour_of_day),
                    "" if r.occurred_at is None else str(r.occurred_at.weekday()),
                ])
            else:
                row.extend(["", "", "", "", ""])
            writer.writerow(row)


def read_features_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, dict]:
    """Returns (X, y, meta) where meta holds the context columns as arrays
    (NaN / empty-string markers where absent)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        idx = {name: header.index(name) for name in header}
        for name in FEATURE_NAMES:
            if name not in idx:
                raise ValueError(f"features file lacks column {name}")
        rows = list(reader)

    n = len(rows)
    X = np.empty((n, len(FEATURE_NAMES)))
    y = np.empty(n, dtype=int)
    lats = np.full(n, np.nan)
    lons = np.full(n, np.nan)
    weather = []
    hours = np.full(n, -1, dtype=int)
    weekdays = np.full(n, -1, dtype=int)
    for i, row in enumerate(rows):
        for j, name in enumerate(FEATURE_NAMES):
            X[i, j] = float(row[idx[name]])
        y[i] = int(row[idx["SEVERITY"]])
        lat_s = row[idx["DEC_LAT"]] if "DEC_LAT" in idx else ""
        lon_s = row[idx["DEC_LONG"]] if "DEC_LONG" in idx else ""
        if lat_s and lon_s:
            lats[i] = float(lat_s)
            lons[i] = float(lon_s)
        weather.append(row[idx["WEATHER1"]] if "WEATHER1" in idx else "")
        h = row[idx["HOUR_OF_DAY"]] if "HOUR_OF_DAY" in idx else ""
        hours[i] = int(h) if h else -1
        w = row[idx["WEEKDAY"]] if "WEEKDAY" in idx else ""
        weekdays[i] = int(w) if w else -1
    meta = {"lat": lats, "lon": lons, "weather": weather, "hour": hours, "weekday": weekdays}
    return X, y, meta
