"""OSM building footprints: parsing and function classification.

Footprints arrive either as a GeoJSON FeatureCollection or as the
documented OSM-XML subset (node table plus ways with ``nd`` refs and
``tag`` elements).  Each footprint's function class is derived from its
building/amenity/shop tags: every informative tag value casts one vote,
and the building is classed only when all votes agree.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable
from xml.etree import ElementTree

from .errors import ParseError, ValidationError
from .geo import GeoPoint

VOTE_KEYS = ("building", "amenity", "shop")

_BUNDLED_TABLE = "function_classes.tsv"


class FunctionClass(enum.Enum):
    RESIDENTIAL = "residential"
    COMMERCIAL = "commercial"
    OTHER = "other"
    UNMAPPED = "unmapped"

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.value


@dataclass(frozen=True)
class Footprint:
    """One building polygon (outer ring only) with its raw tags."""

    id: str
    ring: tuple[GeoPoint, ...]
    tags: dict[str, str]
    function: FunctionClass

    def __post_init__(self) -> None:
        object.__setattr__(self, "ring", tuple(self.ring))
        if len(self.ring) < 3:
            raise ValidationError(f"footprint {self.id!r}: ring needs >= 3 points")

    def bbox(self) -> tuple[float, float, float, float]:
        """(min_lat, min_lon, max_lat, max_lon) of the ring."""
        lats = [p.lat for p in self.ring]
        lons = [p.lon for p in self.ring]
        return min(lats), min(lons), max(lats), max(lons)


@dataclass(frozen=True)
class FunctionTable:
    """Tag-value to class mapping with per-key wildcard support."""

    exact: dict[tuple[str, str], FunctionClass | None]
    wildcard: dict[str, FunctionClass | None] = field(default_factory=dict)

    def vote(self, key: str, value: str) -> FunctionClass | None:
        if (key, value) in self.exact:
            return self.exact[(key, value)]
        return self.wildcard.get(key)


_CLASS_NAMES = {c.value: c for c in FunctionClass if c is not FunctionClass.UNMAPPED}


def _parse_table_text(text: str, source: str) -> FunctionTable:
    exact: dict[tuple[str, str], FunctionClass | None] = {}
    wildcard: dict[str, FunctionClass | None] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            pair, class_name = line.split("\t", 1)
            key, value = pair.split("=", 1)
        except ValueError:
            raise ParseError(f"{source}: line {lineno}: expected 'key=value<TAB>class'")
        class_name = class_name.strip()
        if class_name == "none":
            cls: FunctionClass | None = None
        elif class_name in _CLASS_NAMES:
            cls = _CLASS_NAMES[class_name]
        else:
            raise ParseError(f"{source}: line {lineno}: unknown class {class_name!r}")
        if value == "*":
            wildcard[key] = cls
        else:
            exact[(key, value)] = cls
    return FunctionTable(exact=exact, wildcard=wildcard)


def load_function_table(path: str | Path | None = None) -> FunctionTable:
    """Load a mapping table; with no path, loads the bundled one."""
    if path is None:
        text = resources.files("ftmap.data").joinpath(_BUNDLED_TABLE).read_text("utf-8")
        return _parse_table_text(text, _BUNDLED_TABLE)
    p = Path(path)
    return _parse_table_text(p.read_text("utf-8"), str(p))


_DEFAULT_TABLE: FunctionTable | None = None


def default_function_table() -> FunctionTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = load_function_table()
    return _DEFAULT_TABLE


def classify_tag(key: str, value: str, table: FunctionTable | None = None) -> FunctionClass | None:
    """Vote cast by one tag, or None when it carries no function signal.

    Only the building/amenity/shop keys ever vote; uninformative values
    (building=yes, anything not in the table) cast no vote.
    """
    if key not in VOTE_KEYS:
        return None
    if table is None:
        table = default_function_table()
    return table.vote(key, value)


def aggregate_function(tags: dict[str, str], table: FunctionTable | None = None) -> FunctionClass:
    """Combine tag votes into a single class.

    No votes, or votes that disagree, leave the building unmapped; a lone
    vote or unanimous votes assign that class.
    """
    votes = []
    for key in VOTE_KEYS:
        if key in tags:
            vote = classify_tag(key, tags[key], table)
            if vote is not None:
                votes.append(vote)
    if not votes:
        return FunctionClass.UNMAPPED
    first = votes[0]
    if all(v is first for v in votes):
        return first
    return FunctionClass.UNMAPPED


def _ring_from_positions(positions: Iterable[tuple[float, float]]) -> tuple[GeoPoint, ...] | None:
    """Build a clean ring from (lat, lon) pairs; None when degenerate.

    Drops the closing duplicate and collapses consecutive repeats, then
    requires at least three distinct points.
    """
    pts = [GeoPoint(lat, lon) for lat, lon in positions]
    if len(pts) >= 2 and pts[0] == pts[-1]:
        pts = pts[:-1]
    cleaned: list[GeoPoint] = []
    for p in pts:
        if not cleaned or cleaned[-1] != p:
            cleaned.append(p)
    while len(cleaned) >= 2 and cleaned[0] == cleaned[-1]:
        cleaned.pop()
    if len({(p.lat, p.lon) for p in cleaned}) < 3:
        return None
    return tuple(cleaned)


def _tags_from_properties(props: dict) -> dict[str, str]:
    tags: dict[str, str] = {}
    for k, v in props.items():
        tags[str(k)] = v if isinstance(v, str) else json.dumps(v)
    return tags


def _parse_geojson(text: str, source: str, table: FunctionTable) -> tuple[list[Footprint], int]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{source}: invalid JSON at line {e.lineno} column {e.colno} (char {e.pos})")
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ParseError(f"{source}: expected a GeoJSON FeatureCollection")
    features = doc.get("features", [])
    if not isinstance(features, list):
        raise ParseError(f"{source}: 'features' is not an array")
    footprints: list[Footprint] = []
    seen_ids: set[str] = set()
    skipped = 0
    for index, feature in enumerate(features):
        if not isinstance(feature, dict):
            raise ParseError(f"{source}: feature {index} is not an object")
        geom = feature.get("geometry") or {}
        if not isinstance(geom, dict):
            raise ParseError(f"{source}: feature {index}: malformed geometry")
        gtype = geom.get("type")
        coords = geom.get("coordinates")
        if gtype == "Polygon" and coords:
            outer = coords[0]
        elif gtype == "MultiPolygon" and coords and coords[0]:
            outer = coords[0][0]
        else:
            skipped += 1
            continue
        try:
            ring = _ring_from_positions((lat, lon) for lon, lat in outer)
        except (TypeError, ValueError):
            raise ParseError(f"{source}: feature {index}: malformed coordinates")
        if ring is None:
            skipped += 1
            continue
        props = feature.get("properties") or {}
        if not isinstance(props, dict):
            raise ParseError(f"{source}: feature {index}: properties is not an object")
        tags = _tags_from_properties(props)
        fid = feature.get("id")
        if fid is None:
            fid = props.get("@id", props.get("id", f"f{index}"))
        fid = str(fid)
        if fid in seen_ids:
            raise ParseError(f"{source}: duplicate footprint id {fid!r} at feature {index}")
        seen_ids.add(fid)
        footprints.append(
            Footprint(id=fid, ring=ring, tags=tags, function=aggregate_function(tags, table))
        )
    return footprints, skipped


def _parse_osm_xml(text: str, source: str, table: FunctionTable) -> tuple[list[Footprint], int]:
    try:
        root = ElementTree.fromstring(text)
    except ElementTree.ParseError as e:
        line, col = e.position
        raise ParseError(f"{source}: invalid XML at line {line} column {col}")
    nodes: dict[str, tuple[float, float]] = {}
    for node in root.iter("node"):
        try:
            nodes[node.attrib["id"]] = (float(node.attrib["lat"]), float(node.attrib["lon"]))
        except (KeyError, ValueError):
            raise ParseError(f"{source}: node element missing id/lat/lon")
    footprints: list[Footprint] = []
    seen_ids: set[str] = set()
    skipped = 0
    for way in root.iter("way"):
        way_id = str(way.attrib.get("id", f"w{len(footprints) + skipped}"))
        refs = [nd.attrib.get("ref") for nd in way.findall("nd")]
        if any(r is None or r not in nodes for r in refs):
            skipped += 1
            continue
        ring = _ring_from_positions(nodes[r] for r in refs)  # type: ignore[index]
        if ring is None:
            skipped += 1
            continue
        if way_id in seen_ids:
            raise ParseError(f"{source}: duplicate way id {way_id!r}")
        seen_ids.add(way_id)
        tags = {t.attrib.get("k", ""): t.attrib.get("v", "") for t in way.findall("tag")}
        tags.pop("", None)
        footprints.append(
            Footprint(id=way_id, ring=ring, tags=tags, function=aggregate_function(tags, table))
        )
    return footprints, skipped


def parse_footprints(
    path: str | Path, table: FunctionTable | None = None
) -> tuple[list[Footprint], int]:
    """Parse a footprint file; returns (footprints, skipped_degenerate_count).

    The format is sniffed from the first non-blank byte: ``{`` means
    GeoJSON, ``<`` means the OSM-XML subset.
    """
    if table is None:
        table = default_function_table()
    p = Path(path)
    text = p.read_text("utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return _parse_geojson(text, str(p), table)
    if stripped.startswith("<"):
        return _parse_osm_xml(text, str(p), table)
    raise ParseError(f"{p}: unrecognized footprint format at byte {len(text) - len(stripped)}")


def write_footprints_geojson(footprints: list[Footprint], path: str | Path) -> None:
    """Write footprints as canonical GeoJSON (stable ordering and bytes).

    Features are sorted by id, property keys are sorted, and rings are
    closed per RFC 7946.  Only the raw tags are written; the function
    class is always re-derived on load.
    """
    features = []
    for fp in sorted(footprints, key=lambda f: f.id):
        ring = [[p.lon, p.lat] for p in fp.ring]
        ring.append(ring[0])
        features.append(
            {
                "type": "Feature",
                "id": fp.id,
                "properties": {k: fp.tags[k] for k in sorted(fp.tags)},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            }
        )
    doc = {"type": "FeatureCollection", "features": features}
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n", "utf-8")
