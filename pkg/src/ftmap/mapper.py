"""Photo-to-footprint matching, numeric-text classes, aggregation, export.

Each photo's sight ray (geotag position plus compass bearing) is
intersected with candidate footprints; the nearest intersected building
within range wins.  Matched texts are then classified, tallied per
building-function class, and exported as a GeoJSON/CSV attribute map.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import geo
from .errors import ParseError, ValidationError
from .osm import Footprint, FunctionClass
from .photo import PhotoRecord

DEFAULT_MAX_RANGE_M = 200.0

_METERS_PER_DEG_LAT = geo.EARTH_RADIUS_M * math.pi / 180.0


class NumericTextClass(enum.Enum):
    HOUSE_NUMBER = "house_number"
    CONSTRUCTION_YEAR = "construction_year"
    OTHER_NUMBER = "other_number"
    NON_NUMERIC = "non_numeric"

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.value


@dataclass(frozen=True)
class MatchResult:
    photo_id: str
    footprint_id: str | None
    intersection_distance: float | None
    candidate_count: int

    def __post_init__(self) -> None:
        if (self.footprint_id is None) != (self.intersection_distance is None):
            raise ValidationError(
                f"match {self.photo_id}: footprint_id and distance must be present together"
            )
        if self.intersection_distance is not None and self.intersection_distance < 0:
            raise ValidationError(f"match {self.photo_id}: negative distance")
        if self.candidate_count < 0:
            raise ValidationError(f"match {self.photo_id}: negative candidate count")


@dataclass(frozen=True)
class TextEntry:
    photo_id: str
    text: str
    text_class: NumericTextClass


@dataclass(frozen=True)
class BuildingAttributeRecord:
    footprint_id: str
    function: FunctionClass
    photo_ids: tuple[str, ...]
    texts: tuple[TextEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "photo_ids", tuple(self.photo_ids))
        object.__setattr__(self, "texts", tuple(self.texts))
        if self.texts and not self.photo_ids:
            raise ValidationError(f"record {self.footprint_id}: texts without photos")


def _bbox_within_range(
    fp: Footprint, position: geo.GeoPoint, max_range: float
) -> bool:
    """Coarse prefilter: can any part of the footprint be within range?"""
    # 5% slack so the prefilter never rejects a true candidate.
    d_lat = max_range * 1.05 / _METERS_PER_DEG_LAT
    d_lon = d_lat / max(math.cos(math.radians(position.lat)), 1e-6)
    min_lat, min_lon, max_lat, max_lon = fp.bbox()
    return (
        min_lat <= position.lat + d_lat
        and max_lat >= position.lat - d_lat
        and min_lon <= position.lon + d_lon
        and max_lon >= position.lon - d_lon
    )


def match_image_to_building(
    photo: PhotoRecord,
    footprints: Iterable[Footprint],
    max_range: float = DEFAULT_MAX_RANGE_M,
    *,
    distance_mode: str = "ray",
    count_out_of_range: bool = False,
) -> MatchResult:
    """Match one photo to the building its sight ray hits first.

    Candidates are footprints whose polygon the ray intersects within
    ``max_range`` meters.  The winner has the smallest intersection
    distance (``distance_mode="centroid"`` instead picks the candidate
    whose centroid is nearest the camera); exact ties break toward the
    lexicographically smallest footprint id.  With no candidate in range
    the result is empty, and ``candidate_count`` reports either 0 or the
    number of out-of-range intersections (probed out to where the local
    projection stays valid), per ``count_out_of_range``.
    """
    if photo.position is None or photo.direction is None:
        raise ValidationError(f"photo {photo.id}: matching needs position and direction")
    if distance_mode not in ("ray", "centroid"):
        raise ValidationError(f"unknown distance mode {distance_mode!r}")
    origin = photo.position
    # Counting out-of-range hits needs a wider probe, bounded by how far
    # the local projection stays valid around the camera.
    projection_safe = (
        0.09 * _METERS_PER_DEG_LAT * max(math.cos(math.radians(origin.lat)), 0.1)
    )
    probe_range = max(max_range, projection_safe) if count_out_of_range else max_range
    ray = geo.ray_from_bearing(geo.LocalPoint(0.0, 0.0), photo.direction)
    in_range: list[tuple[float, str, float]] = []  # (sort distance, id, ray distance)
    out_of_range = 0
    for fp in footprints:
        if not _bbox_within_range(fp, origin, probe_range):
            continue
        poly = geo.Polygon2D(tuple(geo.project_local(origin, p) for p in fp.ring))
        dist = geo.ray_polygon_distance(ray, poly)
        if dist is None:
            continue
        if dist > max_range:
            out_of_range += 1
            continue
        if distance_mode == "centroid":
            c = poly.centroid()
            sort_dist = math.hypot(c.x, c.y)
        else:
            sort_dist = dist
        in_range.append((sort_dist, fp.id, dist))
    if not in_range:
        return MatchResult(
            photo_id=photo.id,
            footprint_id=None,
            intersection_distance=None,
            candidate_count=out_of_range if count_out_of_range else 0,
        )
    _, winner_id, winner_dist = min(in_range)
    return MatchResult(
        photo_id=photo.id,
        footprint_id=winner_id,
        intersection_distance=winner_dist,
        candidate_count=len(in_range),
    )


_YEAR_RE = re.compile(r"\d{4}")
_HOUSE_NUMBER_RE = re.compile(r"\d{1,4}[A-Za-z]?")
EARLIEST_CONSTRUCTION_YEAR = 1200


def classify_numeric_text(text: str, current_year: int) -> NumericTextClass:
    """Sort a recognized string into the numeric-text classes.

    Four-digit tokens that read as a plausible year (1200..current_year)
    are construction years; other tokens of one to four digits with an
    optional single trailing letter ("12a") are house numbers; anything
    else containing a digit is some other number; the rest is not numeric.
    """
    token = text.strip()
    if _YEAR_RE.fullmatch(token) and EARLIEST_CONSTRUCTION_YEAR <= int(token) <= current_year:
        return NumericTextClass.CONSTRUCTION_YEAR
    if _HOUSE_NUMBER_RE.fullmatch(token):
        return NumericTextClass.HOUSE_NUMBER
    if any(c.isdigit() for c in token):
        return NumericTextClass.OTHER_NUMBER
    return NumericTextClass.NON_NUMERIC


TABLE_CLASSES = (FunctionClass.RESIDENTIAL, FunctionClass.COMMERCIAL, FunctionClass.OTHER)


@dataclass(frozen=True)
class FunctionAggregate:
    """Per-class image counts: total matched and with >= 1 surviving text."""

    rows: dict[FunctionClass, tuple[int, int]]

    def totals(self) -> tuple[int, int]:
        images = sum(v[0] for v in self.rows.values())
        with_text = sum(v[1] for v in self.rows.values())
        return images, with_text

    def class_share(self, cls: FunctionClass) -> float:
        total = self.totals()[0]
        return self.rows[cls][0] / total if total else 0.0

    def with_text_ratio(self) -> float:
        images, with_text = self.totals()
        return with_text / images if images else 0.0


def aggregate_by_function(
    matches: Iterable[MatchResult],
    kept_detection_photo_ids: set[str],
    footprints_by_id: dict[str, Footprint],
) -> FunctionAggregate:
    """Tally matched images (and those with texts) per function class.

    Matches referencing an unknown footprint raise; matches to unmapped
    buildings are not part of the three-class table.
    """
    rows = {cls: [0, 0] for cls in TABLE_CLASSES}
    for m in matches:
        if m.footprint_id is None:
            continue
        fp = footprints_by_id.get(m.footprint_id)
        if fp is None:
            raise ValidationError(f"match {m.photo_id}: unknown footprint {m.footprint_id}")
        if fp.function not in rows:
            continue
        rows[fp.function][0] += 1
        if m.photo_id in kept_detection_photo_ids:
            rows[fp.function][1] += 1
    return FunctionAggregate(rows={cls: (v[0], v[1]) for cls, v in rows.items()})


def build_attribute_records(
    matches: Iterable[MatchResult],
    texts: Iterable[TextEntry],
    footprints_by_id: dict[str, Footprint],
) -> list[BuildingAttributeRecord]:
    """Group matched photos and their classified texts per building."""
    photos_by_fp: dict[str, set[str]] = {}
    match_fp_by_photo: dict[str, str] = {}
    for m in matches:
        if m.footprint_id is None:
            continue
        photos_by_fp.setdefault(m.footprint_id, set()).add(m.photo_id)
        match_fp_by_photo[m.photo_id] = m.footprint_id
    texts_by_fp: dict[str, list[TextEntry]] = {}
    for entry in texts:
        fp_id = match_fp_by_photo.get(entry.photo_id)
        if fp_id is not None:
            texts_by_fp.setdefault(fp_id, []).append(entry)
    records = []
    for fp_id in sorted(photos_by_fp):
        fp = footprints_by_id.get(fp_id)
        if fp is None:
            raise ValidationError(f"unknown footprint {fp_id} in matches")
        entries = sorted(
            texts_by_fp.get(fp_id, []), key=lambda e: (e.photo_id, e.text, e.text_class.value)
        )
        records.append(
            BuildingAttributeRecord(
                footprint_id=fp_id,
                function=fp.function,
                photo_ids=tuple(sorted(photos_by_fp[fp_id])),
                texts=tuple(entries),
            )
        )
    return records


def export_map(
    records: list[BuildingAttributeRecord],
    footprints_by_id: dict[str, Footprint],
    path: str | Path,
    fmt: str,
) -> None:
    """Write the attribute map as GeoJSON or CSV, deterministically.

    GeoJSON carries one Feature per building with function, texts, and
    photo count; CSV has one row per (building, text) under the header
    footprint_id,function,photo_id,text,text_class.
    """
    ordered = sorted(records, key=lambda r: r.footprint_id)
    if fmt == "geojson":
        features = []
        for rec in ordered:
            fp = footprints_by_id[rec.footprint_id]
            ring = [[p.lon, p.lat] for p in fp.ring]
            ring.append(ring[0])
            features.append(
                {
                    "type": "Feature",
                    "id": rec.footprint_id,
                    "properties": {
                        "function": rec.function.value,
                        "texts": [
                            {"text": e.text, "class": e.text_class.value} for e in rec.texts
                        ],
                        "photo_count": len(rec.photo_ids),
                    },
                    "geometry": {"type": "Polygon", "coordinates": [ring]},
                }
            )
        doc = {"type": "FeatureCollection", "features": features}
        Path(path).write_text(
            json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n", "utf-8"
        )
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["footprint_id", "function", "photo_id", "text", "text_class"])
            for rec in ordered:
                for e in rec.texts:
                    writer.writerow(
                        [rec.footprint_id, rec.function.value, e.photo_id, e.text, e.text_class.value]
                    )
    else:
        raise ValidationError(f"unknown export format {fmt!r}")


def read_attribute_geojson(path: str | Path) -> list[tuple[str, FunctionClass, list[str]]]:
    """Re-import an exported GeoJSON map as (id, function, texts) tuples."""
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}")
    out = []
    for feature in doc.get("features", []):
        props = feature.get("properties", {})
        out.append(
            (
                str(feature.get("id")),
                FunctionClass(props.get("function")),
                [t["text"] for t in props.get("texts", [])],
            )
        )
    return out


def read_text_entries(path: str | Path) -> list[TextEntry]:
    """Read classified-text JSONL: {photo_id, text, text_class}."""
    out: list[TextEntry] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                fields = json.loads(line)
                out.append(
                    TextEntry(
                        photo_id=str(fields["photo_id"]),
                        text=str(fields["text"]),
                        text_class=NumericTextClass(fields["text_class"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ParseError(f"{path}: line {lineno}: {e}")
    return out


def write_text_entries(entries: Iterable[TextEntry], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in entries:
            fields = {"photo_id": e.photo_id, "text": e.text, "text_class": e.text_class.value}
            fh.write(json.dumps(fields, ensure_ascii=False, separators=(",", ":")) + "\n")


def read_matches(path: str | Path) -> list[MatchResult]:
    """Read match JSONL: {photo_id, footprint_id?, intersection_distance?, candidate_count}."""
    out: list[MatchResult] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                fields = json.loads(line)
                out.append(
                    MatchResult(
                        photo_id=str(fields["photo_id"]),
                        footprint_id=(
                            str(fields["footprint_id"])
                            if fields.get("footprint_id") is not None
                            else None
                        ),
                        intersection_distance=(
                            float(fields["intersection_distance"])
                            if fields.get("intersection_distance") is not None
                            else None
                        ),
                        candidate_count=int(fields.get("candidate_count", 0)),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as e:
                raise ParseError(f"{path}: line {lineno}: {e}")
    return out


def write_matches(matches: Iterable[MatchResult], path: str | Path) -> None:
    """Canonical match writer, sorted by photo id."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for m in sorted(matches, key=lambda m: m.photo_id):
            fields: dict = {"photo_id": m.photo_id}
            if m.footprint_id is not None:
                fields["footprint_id"] = m.footprint_id
                fields["intersection_distance"] = m.intersection_distance
            fields["candidate_count"] = m.candidate_count
            fh.write(json.dumps(fields, ensure_ascii=False, separators=(",", ":")) + "\n")
