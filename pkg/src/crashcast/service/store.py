"""Crash-record store: checksummed append-only log plus an in-memory grid
index rebuilt on load. Spatial queries gather candidate cells and filter
exactly, so results always match a full scan."""

from __future__ import annotations

import json
import zlib
from datetime import datetime
from pathlib import Path
from typing import Iterable, Optional

from ..cells import CellId, cell_of, cells_in_bbox
from ..core import (
    CANONICAL_CODES,
    CANONICAL_FLAGS,
    CrashRecord,
    GeoPoint,
    SeverityLevel,
    WEATHER_CATEGORY_NAMES,
)

STORE_RESOLUTION = 8
LOG_NAME = "crashes.log"


class CorruptLog(RuntimeError):
    pass


class StorageFull(OSError):
    pass


def record_to_dict(record: CrashRecord) -> dict:
    return {
        "id": record.id,
        "lat": record.location.lat if record.location else None,
        "lon": record.location.lon if record.location else None,
        "occurred_at": record.occurred_at.isoformat() if record.occurred_at else None,
        "hour_of_day": record.hour_of_day,
        "crash_month": record.crash_month,
        "severity": int(record.severity) if record.severity is not None else None,
        "county": record.county,
        "flags": {k: record.flags.get(k) for k in CANONICAL_FLAGS},
        "codes": {k: record.codes.get(k) for k in CANONICAL_CODES},
    }


def record_from_dict(d: dict) -> CrashRecord:
    location = GeoPoint(d["lat"], d["lon"]) if d.get("lat") is not None else None
    occurred = datetime.fromisoformat(d["occurred_at"]) if d.get("occurred_at") else None
    severity = SeverityLevel(d["severity"]) if d.get("severity") is not None else None
    return CrashRecord(
        id=d["id"],
        location=location,
        occurred_at=occurred,
        hour_of_day=d.get("hour_of_day"),
        crash_month=d.get("crash_month"),
        severity=severity,
        county=d.get("county", ""),
        flags=dict(d.get("flags", {})),
        codes=dict(d.get("codes", {})),
    )


def _line_for(payload: dict) -> str:
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    crc = zlib.crc32(body.encode("utf-8"))
    return json.dumps({"record": payload, "crc": crc}, sort_keys=True, separators=(",", ":"))


class CrashStore:
    def __init__(self, directory: str | Path, resolution: int = STORE_RESOLUTION):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.log_path = self.directory / LOG_NAME
        self.resolution = resolution
        self.records: list[CrashRecord] = []
        self._index: dict[CellId, list[int]] = {}
        if self.log_path.exists():
            self._load()

    def _load(self) -> None:
        with self.log_path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    doc = json.loads(line)
                    payload = doc["record"]
                    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
                    if zlib.crc32(body.encode("utf-8")) != doc["crc"]:
                        raise CorruptLog(f"checksum mismatch at line {line_no}")
                except (KeyError, ValueError) as exc:
                    raise CorruptLog(f"unreadable log line {line_no}: {exc}") from exc
                self._add_to_memory(record_from_dict(payload))

    def _add_to_memory(self, record: CrashRecord) -> None:
        idx = len(self.records)
        self.records.append(record)
        if record.location is not None:
            self._index.setdefault(cell_of(record.location, self.resolution), []).append(idx)

    def insert(self, record: CrashRecord) -> None:
        self.insert_many([record])

    def insert_many(self, records: Iterable[CrashRecord]) -> int:
        records = list(records)
        lines = [_line_for(record_to_dict(r)) for r in records]
        try:
            with self.log_path.open("a", encoding="utf-8") as fh:
                for line in lines:
                    fh.write(line + "\n")
        except OSError as exc:
            raise StorageFull(f"cannot append to {self.log_path}: {exc}") from exc
        for record in records:
            self._add_to_memory(record)
        return len(records)

    def __len__(self) -> int:
        return len(self.records)

    def spatial_query(
        self,
        min_lat: float,
        min_lon: float,
        max_lat: float,
        max_lon: float,
        t0: Optional[datetime] = None,
        t1: Optional[datetime] = None,
    ) -> list[CrashRecord]:
        """Records inside the bbox (inclusive) and time range, insertion order."""
        hits: list[int] = []
        for cell in cells_in_bbox(min_lat, min_lon, max_lat, max_lon, self.resolution):
            hits.extend(self._index.get(cell, ()))
        out = []
        for idx in sorted(hits):
            r = self.records[idx]
            loc = r.location
            if loc is None or not (min_lat <= loc.lat <= max_lat and min_lon <= loc.lon <= max_lon):
                continue
            if t0 is not None and (r.occurred_at is None or r.occurred_at < t0):
                continue
            if t1 is not None and (r.occurred_at is None or r.occurred_at > t1):
                continue
            out.append(r)
        return out

    def active_cells(self, resolution: int) -> list[CellId]:
        """Cells (at the given resolution) containing at least one crash."""
        seen = set()
        for r in self.records:
            if r.location is not None:
                seen.add(cell_of(r.location, resolution))
        return sorted(seen)


def sql_export(records: Iterable[CrashRecord]) -> str:
    """Emit the external spatial-database form of the store (documented
    export; the upstream schema's doubled time-zone qualifier is invalid SQL
    and is emitted in the standard single form)."""
    lines = [
        "CREATE TABLE crashes (",
        "  id SERIAL PRIMARY KEY,",
        "  location GEOMETRY(Point, 4326),",
        "  crash_datetime TIMESTAMPTZ,",
        "  severity INTEGER,",
        "  weather_condition VARCHAR(50),",
        "  road_condition VARCHAR(50)",
        ");",
        "CREATE INDEX idx_crashes_location ON crashes USING GIST (location);",
        "CREATE INDEX idx_crashes_datetime ON crashes (crash_datetime);",
    ]
    for r in records:
        if r.location is None or r.occurred_at is None or r.severity is None:
            continue
        weather = WEATHER_CATEGORY_NAMES.get(r.codes.get("WEATHER1") or "", "Unknown")
        road = r.codes.get("ROAD_CONDITION") or "0"
        lines.append(
            "INSERT INTO crashes (location, crash_datetime, severity, weather_condition, road_condition) "
            f"VALUES (ST_SetSRID(ST_MakePoint({r.location.lon!r}, {r.location.lat!r}), 4326), "
            f"'{r.occurred_at.isoformat()}', {int(r.severity)}, '{weather}', '{road}');"
        )
    return "\n".join(lines) + "\n"
