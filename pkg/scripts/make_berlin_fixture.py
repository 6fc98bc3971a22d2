#!/usr/bin/env python3
"""Regenerate the bundled Berlin aggregate fixture.

Builds a deterministic set of footprints, matches, and raw detections
whose aggregate counts equal the published per-class totals for the
Berlin dataset (residential 1833/892, commercial 605/330, other 993/336).
The script validates the fixture with the real pipeline code before
writing anything: every detection must survive the text filters, and the
aggregate table must come out exactly right.

Usage: python scripts/make_berlin_fixture.py [out_dir]
Default out_dir: tests/fixtures/berlin
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

from ftmap import mapper, osm, strpost
from ftmap.osm import FunctionClass

SEED = 20240601

# (class, images, images_with_text) per the published Berlin table.
CLASS_PLAN = [
    (FunctionClass.RESIDENTIAL, 1833, 892),
    (FunctionClass.COMMERCIAL, 605, 330),
    (FunctionClass.OTHER, 993, 336),
]

FOOTPRINTS_PER_CLASS = {
    FunctionClass.RESIDENTIAL: 60,
    FunctionClass.COMMERCIAL: 25,
    FunctionClass.OTHER: 35,
}

TAG_CHOICES = {
    FunctionClass.RESIDENTIAL: [
        {"building": "apartments"},
        {"building": "residential"},
        {"building": "house"},
        {"building": "terrace"},
    ],
    FunctionClass.COMMERCIAL: [
        {"building": "retail"},
        {"building": "commercial"},
        {"building": "yes", "shop": "bakery"},
        {"shop": "supermarket"},
        {"amenity": "cafe"},
        {"building": "retail", "shop": "clothes"},
    ],
    FunctionClass.OTHER: [
        {"building": "church"},
        {"building": "school"},
        {"building": "industrial"},
        {"building": "yes", "amenity": "library"},
        {"building": "warehouse"},
    ],
}

TEXT_POOL = [
    "Bäckerei", "Apotheke", "Restaurant", "Kaffeehaus", "Friseur", "Blumen",
    "Buchhandlung", "Kino", "Galerie", "Pension", "Zahnarzt", "Optik",
    "Metzgerei", "Schneiderei", "Konditorei", "Weinhandlung", "Hotel",
    "Theater", "Berliner", "Postamt", "Markthalle", "Eisenwaren",
    "1907", "1925", "1896", "2003", "12", "7a", "24", "138", "51", "9",
]

LAT0, LON0 = 52.45, 13.35
CELL_LAT, CELL_LON = 0.001, 0.0015
SIDE = 0.0003


def build_footprints() -> list[osm.Footprint]:
    footprints = []
    index = 0
    for cls, count in FOOTPRINTS_PER_CLASS.items():
        choices = TAG_CHOICES[cls]
        for k in range(count):
            row, col = divmod(index, 12)
            lat = round(LAT0 + row * CELL_LAT, 6)
            lon = round(LON0 + col * CELL_LON, 6)
            ring = (
                osm.GeoPoint(lat, lon),
                osm.GeoPoint(lat, round(lon + SIDE, 6)),
                osm.GeoPoint(round(lat + SIDE, 6), round(lon + SIDE, 6)),
                osm.GeoPoint(round(lat + SIDE, 6), lon),
            )
            tags = choices[k % len(choices)]
            function = osm.aggregate_function(tags)
            assert function is cls, f"tags {tags} classified as {function}, wanted {cls}"
            footprints.append(
                osm.Footprint(id=f"b{index + 1}", ring=ring, tags=dict(tags), function=function)
            )
            index += 1
    return footprints


def build_matches_and_detections(
    footprints: list[osm.Footprint], rng: random.Random
) -> tuple[list[mapper.MatchResult], list[strpost.StrDetection]]:
    by_class: dict[FunctionClass, list[osm.Footprint]] = {}
    for fp in footprints:
        by_class.setdefault(fp.function, []).append(fp)
    matches = []
    detections = []
    photo_index = 0
    for cls, images, with_text in CLASS_PLAN:
        pool = by_class[cls]
        for k in range(images):
            photo_index += 1
            photo_id = f"p{photo_index}"
            fp = pool[k % len(pool)]
            matches.append(
                mapper.MatchResult(
                    photo_id=photo_id,
                    footprint_id=fp.id,
                    intersection_distance=round(rng.uniform(3.0, 80.0), 2),
                    candidate_count=rng.randint(1, 3),
                )
            )
            if k < with_text:
                for _ in range(rng.randint(1, 2)):
                    x, y = rng.randint(5, 600), rng.randint(5, 400)
                    w, h = rng.randint(30, 200), rng.randint(12, 60)
                    detections.append(
                        strpost.StrDetection(
                            photo_id=photo_id,
                            text=rng.choice(TEXT_POOL),
                            text_score=round(rng.uniform(0.805, 0.995), 3),
                            box=((x, y), (x + w, y), (x + w, y + h), (x, y + h)),
                            box_score=round(rng.uniform(0.805, 0.995), 3),
                        )
                    )
    return matches, detections


def validate(
    footprints: list[osm.Footprint],
    matches: list[mapper.MatchResult],
    detections: list[strpost.StrDetection],
) -> None:
    kept, _ = strpost.filter_pipeline(
        detections,
        strpost.StrFilterConfig(allowlist=strpost.load_bundled_allowlist()),
    )
    assert len(kept) == len(detections), "a fixture detection would be filtered out"
    agg = mapper.aggregate_by_function(
        matches, {d.photo_id for d in detections}, {fp.id: fp for fp in footprints}
    )
    for cls, images, with_text in CLASS_PLAN:
        assert agg.rows[cls] == (images, with_text), f"{cls}: {agg.rows[cls]}"
    assert agg.totals() == (3431, 1558), agg.totals()


def main() -> int:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("tests/fixtures/berlin")
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    footprints = build_footprints()
    matches, detections = build_matches_and_detections(footprints, rng)
    validate(footprints, matches, detections)
    osm.write_footprints_geojson(footprints, out_dir / "footprints.geojson")
    mapper.write_matches(matches, out_dir / "matches.jsonl")
    strpost.write_detections(detections, out_dir / "detections_str.jsonl")
    manifest = {
        "seed": SEED,
        "photos": len(matches),
        "detections": len(detections),
        "footprints": len(footprints),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", "utf-8")
    print(f"fixture written to {out_dir}: {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
