"""Photo metadata ingest and the two metadata filters.

Records come from a JSONL dump or from a paged REST endpoint compatible
with crowdsourced-photo APIs.  Two filters follow: duplicate geotags
(manual batch tagging leaves several photos on the exact same position)
and missing compass direction (no sight line without it).
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import requests

from .errors import (
    AuthError,
    MalformedPageError,
    RetryExhaustedError,
    ValidationError,
)
from .geo import GeoPoint

API_KEY_ENV = "FTM_API_KEY"
TOTAL_PAGES_HEADER = "X-Total-Pages"

# Geotags are compared after rounding to 6 decimal places (~0.11 m), the
# usual stored precision, so "same position" is deterministic.
POSITION_DECIMALS = 6


@dataclass(frozen=True)
class PhotoRecord:
    """One photo's metadata as extracted from EXIF plus platform fields."""

    id: str
    position: GeoPoint | None = None
    direction: float | None = None
    taken_at: int | None = None
    uploader: str = ""
    image_ref: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("photo record needs a non-empty id")
        if self.direction is not None and not 0.0 <= self.direction < 360.0:
            raise ValidationError(f"photo {self.id}: direction {self.direction} outside [0, 360)")


@dataclass(frozen=True)
class FilterReport:
    stage: str
    input_count: int
    kept_count: int
    dropped_count: int

    def __post_init__(self) -> None:
        counts = (self.input_count, self.kept_count, self.dropped_count)
        if any(c < 0 for c in counts):
            raise ValidationError(f"{self.stage}: negative count in {counts}")
        if self.kept_count + self.dropped_count != self.input_count:
            raise ValidationError(f"{self.stage}: kept + dropped != input for {counts}")

    def line(self) -> str:
        return (
            f"stage={self.stage} input={self.input_count} "
            f"kept={self.kept_count} dropped={self.dropped_count}"
        )


def _record_from_fields(fields: dict) -> PhotoRecord:
    lat = fields.get("lat")
    lon = fields.get("lon")
    position = None
    if lat is not None and lon is not None:
        position = GeoPoint(float(lat), float(lon))
    direction = fields.get("direction")
    taken_at = fields.get("taken_at")
    return PhotoRecord(
        id=str(fields["id"]),
        position=position,
        direction=float(direction) if direction is not None else None,
        taken_at=int(taken_at) if taken_at is not None else None,
        uploader=str(fields.get("uploader", "")),
        image_ref=str(fields.get("image_ref", "")),
    )


def parse_photo_records(path: str | Path) -> tuple[list[PhotoRecord], int]:
    """Parse a JSONL metadata file; returns (records, skipped_line_count).

    Missing fields are fine (they become absent); lines that are not JSON
    objects, lack an id, repeat an earlier id, or carry out-of-range
    values are counted and skipped.  Blank lines are ignored.
    """
    records: list[PhotoRecord] = []
    seen_ids: set[str] = set()
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                fields = json.loads(line)
                if not isinstance(fields, dict) or "id" not in fields:
                    raise ValidationError("not a record object")
                record = _record_from_fields(fields)
                if record.id in seen_ids:
                    raise ValidationError("duplicate id")
                seen_ids.add(record.id)
                records.append(record)
            except (json.JSONDecodeError, ValidationError, TypeError, ValueError):
                skipped += 1
    return records, skipped


def write_photo_records(records: Iterable[PhotoRecord], path: str | Path) -> None:
    """Canonical JSONL writer: fixed key order, absent fields omitted."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fields: dict = {"id": rec.id}
            if rec.position is not None:
                fields["lat"] = rec.position.lat
                fields["lon"] = rec.position.lon
            if rec.direction is not None:
                fields["direction"] = rec.direction
            if rec.taken_at is not None:
                fields["taken_at"] = rec.taken_at
            if rec.uploader:
                fields["uploader"] = rec.uploader
            if rec.image_ref:
                fields["image_ref"] = rec.image_ref
            fh.write(json.dumps(fields, ensure_ascii=False, separators=(",", ":")) + "\n")


def fetch_photo_metadata(
    endpoint: str,
    bbox: tuple[float, float, float, float],
    page_size: int = 250,
    *,
    api_key: str | None = None,
    max_attempts: int = 3,
    backoff_base: float = 0.5,
    session: requests.Session | None = None,
) -> list[PhotoRecord]:
    """Fetch all pages of ``GET endpoint?bbox=...&page=N&per_page=K``.

    The endpoint must return a JSON array of records per page and a
    ``X-Total-Pages`` header.  The API key comes from ``api_key`` or the
    FTM_API_KEY environment variable and is passed as the ``api_key``
    query parameter.  Transient failures (connection errors, 5xx) are
    retried with exponential backoff up to ``max_attempts`` per page;
    results are deduplicated by id and returned sorted by id.
    """
    key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
    if not key:
        raise AuthError(f"no API key: set {API_KEY_ENV}")
    sess = session or requests.Session()
    bbox_param = ",".join(str(v) for v in bbox)

    def get_page(page: int) -> tuple[list, int]:
        last_error: Exception | None = None
        for attempt in range(max_attempts):
            if attempt:
                time.sleep(backoff_base * 2 ** (attempt - 1))
            try:
                resp = sess.get(
                    endpoint,
                    params={"bbox": bbox_param, "page": page, "per_page": page_size, "api_key": key},
                    timeout=30,
                )
            except requests.RequestException as e:
                last_error = e
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint rejected the API key (HTTP {resp.status_code})")
            if resp.status_code >= 500:
                last_error = MalformedPageError(f"page {page}: HTTP {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise MalformedPageError(f"page {page}: unexpected HTTP {resp.status_code}")
            total_raw = resp.headers.get(TOTAL_PAGES_HEADER)
            try:
                total = int(total_raw)  # type: ignore[arg-type]
            except (TypeError, ValueError):
                raise MalformedPageError(f"page {page}: missing or bad {TOTAL_PAGES_HEADER} header")
            try:
                body = resp.json()
            except ValueError:
                raise MalformedPageError(f"page {page}: body is not JSON")
            if not isinstance(body, list):
                raise MalformedPageError(f"page {page}: body is not a JSON array")
            return body, total
        raise RetryExhaustedError(f"page {page}: {max_attempts} attempts failed: {last_error}")

    by_id: dict[str, PhotoRecord] = {}

    def absorb(body: list, page: int) -> None:
        for item in body:
            try:
                rec = _record_from_fields(item)
            except (ValidationError, TypeError, ValueError, KeyError):
                raise MalformedPageError(f"page {page}: malformed record {item!r}")
            by_id.setdefault(rec.id, rec)

    first, total_pages = get_page(1)
    absorb(first, 1)
    for page in range(2, total_pages + 1):
        body, _ = get_page(page)
        absorb(body, page)
    return [by_id[i] for i in sorted(by_id)]


def _position_key(rec: PhotoRecord, per_uploader: bool) -> tuple:
    assert rec.position is not None
    key: tuple = (
        round(rec.position.lat, POSITION_DECIMALS),
        round(rec.position.lon, POSITION_DECIMALS),
    )
    if per_uploader:
        key = key + (rec.uploader,)
    return key


def filter_duplicate_positions(
    records: list[PhotoRecord], *, per_uploader: bool = False
) -> tuple[list[PhotoRecord], FilterReport]:
    """Drop every photo whose exact position is shared with another.

    Identical geotags suggest manual batch tagging rather than a GPS fix,
    so the whole group goes.  Records without a position pass through
    untouched; the direction filter deals with those.
    """
    counts: dict[tuple, int] = {}
    for rec in records:
        if rec.position is not None:
            key = _position_key(rec, per_uploader)
            counts[key] = counts.get(key, 0) + 1
    kept = [
        rec
        for rec in records
        if rec.position is None or counts[_position_key(rec, per_uploader)] == 1
    ]
    report = FilterReport(
        stage="duplicate-position",
        input_count=len(records),
        kept_count=len(kept),
        dropped_count=len(records) - len(kept),
    )
    return kept, report


def filter_missing_direction(
    records: list[PhotoRecord],
) -> tuple[list[PhotoRecord], FilterReport]:
    """Keep only photos that can seed a sight line.

    That needs both a compass direction and a position; records lacking
    either are dropped here.
    """
    kept = [rec for rec in records if rec.direction is not None and rec.position is not None]
    report = FilterReport(
        stage="missing-direction",
        input_count=len(records),
        kept_count=len(kept),
        dropped_count=len(records) - len(kept),
    )
    return kept, report
