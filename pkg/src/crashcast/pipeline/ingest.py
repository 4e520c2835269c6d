"""CSV ingestion and emission for the canonical record schema.

Header row required; column order is free on read and canonical on write.
Malformed rows are reported with their line number and never silently
dropped. Missing values are empty fields.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

from ..core import (
    CANONICAL_CODES,
    CANONICAL_FLAGS,
    CSV_COLUMNS,
    CrashRecord,
    GeoPoint,
    OutOfRangeSeverity,
    parse_severity,
)


class MissingHeader(ValueError):
    pass


class UnreadableFile(OSError):
    pass


@dataclass(frozen=True)
class ParseError:
    line: int  # 1-based, header is line 1
    message: str


def _parse_datetime(text: str) -> datetime:
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _parse_row(row: dict[str, str]) -> CrashRecord:
    rid = row.get("ID", "").strip()
    if not rid:
        raise ValueError("empty ID")

    lat_s, lon_s = row.get("DEC_LAT", "").strip(), row.get("DEC_LONG", "").strip()
    if lat_s and lon_s:
        location: Optional[GeoPoint] = GeoPoint(float(lat_s), float(lon_s))
    elif lat_s or lon_s:
        raise ValueError("partial coordinates: need both DEC_LAT and DEC_LONG")
    else:
        location = None

    dt_s = row.get("CRASH_DATETIME", "").strip()
    occurred_at = _parse_datetime(dt_s) if dt_s else None

    def opt_int(name: str) -> Optional[int]:
        s = row.get(name, "").strip()
        return int(s) if s else None

    sev_s = row.get("SEVERITY", "").strip()
    severity = parse_severity(int(sev_s)) if sev_s else None

    flags = {}
    for name in CANONICAL_FLAGS:
        s = row.get(name, "").strip()
        if not s:
            flags[name] = None
        else:
            v = int(s)
            if v not in (0, 1):
                raise ValueError(f"flag {name} must be 0 or 1, got {s}")
            flags[name] = v

    codes = {}
    for name in CANONICAL_CODES:
        s = row.get(name, "").strip()
        codes[name] = s if s else None

    return CrashRecord(
        id=rid,
        location=location,
        occurred_at=occurred_at,
        hour_of_day=opt_int("HOUR_OF_DAY"),
        crash_month=opt_int("CRASH_MONTH"),
        severity=severity,
        county=row.get("COUNTY", "").strip(),
        flags=flags,
        codes=codes,
    )


def ingest_csv(path: str | Path) -> tuple[list[CrashRecord], list[ParseError]]:
    """Read records; well-formed rows become CrashRecords, the rest become
    ParseErrors keyed by line number."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(str(exc)) from exc

    records: list[CrashRecord] = []
    errors: list[ParseError] = []
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingHeader(f"{path} has no header row")
        normalized = [h.strip().upper() for h in header]
        missing = [c for c in CSV_COLUMNS if c not in normalized]
        if missing:
            raise MissingHeader(f"{path} lacks columns: {', '.join(missing)}")
        col_index = {name: normalized.index(name) for name in CSV_COLUMNS}

        for line_no, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            try:
                row = {name: (raw[i] if i < len(raw) else "") for name, i in col_index.items()}
                records.append(_parse_row(row))
            except (ValueError, OutOfRangeSeverity) as exc:
                errors.append(ParseError(line=line_no, message=str(exc)))
    return records, errors


def _format_value(value) -> str:
    if value is None:
        return ""
    return str(value)


def record_to_row(record: CrashRecord) -> list[str]:
    row = [
        record.id,
        repr(record.location.lat) if record.location else "",
        repr(record.location.lon) if record.location else "",
        record.occurred_at.isoformat() if record.occurred_at else "",
        _format_value(record.hour_of_day),
        _format_value(record.crash_month),
        _format_value(int(record.severity) if record.severity is not None else None),
        record.county,
    ]
    row.extend(_format_value(record.flags.get(name)) for name in CANONICAL_FLAGS)
    row.extend(_format_value(record.codes.get(name)) for name in CANONICAL_CODES)
    return row


def write_csv(records: Iterable[CrashRecord], path: str | Path) -> None:
    """Write records in the canonical column order (round-trips ingest_csv)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(record_to_row(record))
