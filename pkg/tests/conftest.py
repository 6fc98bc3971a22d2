import json
from pathlib import Path

import pytest

from ftmap import geo, osm
from ftmap.osm import FunctionClass
from ftmap.strpost import StrDetection

FIXTURES = Path(__file__).parent / "fixtures"

UNIT_BOX = ((0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0))

P1 = geo.GeoPoint(52.5, 13.4)
P2 = geo.GeoPoint(52.5005, 13.4005)


@pytest.fixture(scope="session")
def berlin_dir() -> Path:
    return FIXTURES / "berlin"


def make_det(
    text: str,
    text_score: float = 0.9,
    box_score: float = 0.9,
    photo_id: str = "p1",
) -> StrDetection:
    return StrDetection(
        photo_id=photo_id,
        text=text,
        text_score=text_score,
        box=UNIT_BOX,
        box_score=box_score,
    )


def local_ring(origin, x0, y0, x1, y1):
    return tuple(
        geo.unproject_local(origin, geo.LocalPoint(x, y))
        for x, y in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))
    )


def jsonl(path, rows):
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), "utf-8")


def build_pipeline_scenario(tmp_path: Path) -> tuple[Path, Path]:
    """Raw inputs for a small two-photo end-to-end pipeline run.

    Photos p1/p2 survive every filter and match buildings b1/b2 at 5 m;
    p3/p4 share a geotag, p5 lacks a direction.  Detection sidecars feed
    the mock engine with a mix of clean, stopword, repetitive, and
    low-score texts.
    """
    raw = tmp_path / "raw"
    raw.mkdir()
    work = tmp_path / "work"

    footprints = [
        osm.Footprint(
            id="b1",
            ring=local_ring(P1, -5, 5, 5, 15),
            tags={"building": "apartments"},
            function=FunctionClass.RESIDENTIAL,
        ),
        osm.Footprint(
            id="b2",
            ring=local_ring(P2, 5, -5, 15, 5),
            tags={"shop": "bakery"},
            function=FunctionClass.COMMERCIAL,
        ),
    ]
    osm.write_footprints_geojson(footprints, raw / "footprints.geojson")

    jsonl(
        raw / "photos.jsonl",
        [
            {"id": "p1", "lat": P1.lat, "lon": P1.lon, "direction": 0.0, "uploader": "u1"},
            {"id": "p2", "lat": P2.lat, "lon": P2.lon, "direction": 90.0, "uploader": "u2"},
            {"id": "p3", "lat": 52.49, "lon": 13.39, "direction": 10.0},
            {"id": "p4", "lat": 52.49, "lon": 13.39, "direction": 20.0},
            {"id": "p5", "lat": 52.495, "lon": 13.405},
        ],
    )
    jsonl(
        raw / "features.jsonl",
        [
            {"photo_id": "p1", "values": [1.0, 0.0]},
            {"photo_id": "p2", "values": [0.95, 0.05]},
        ],
    )
    jsonl(raw / "seeds.jsonl", [{"photo_id": "seed1", "values": [1.0, 0.0]}])
    jsonl(
        raw / "objects.jsonl",
        [
            {"photo_id": "p1", "label": "building", "confidence": 0.95, "size": 0.4},
            {"photo_id": "p2", "label": "house", "confidence": 0.9, "size": 0.3},
        ],
    )

    box = [[10, 10], [60, 10], [60, 30], [10, 30]]
    images = raw / "images"
    images.mkdir()
    (images / "p1.png").write_bytes(b"")
    (images / "p2.png").write_bytes(b"")
    (images / "p1.png.truth.json").write_text(
        json.dumps(
            [
                {"text": "Bäckerei", "text_score": 0.92, "box": box, "box_score": 0.9},
                {"text": "the", "text_score": 0.99, "box": box, "box_score": 0.99},
                {"text": "IIIII", "text_score": 0.95, "box": box, "box_score": 0.9},
            ]
        ),
        "utf-8",
    )
    (images / "p2.png.truth.json").write_text(
        json.dumps(
            [
                {"text": "1907", "text_score": 0.9, "box": box, "box_score": 0.85},
                {"text": "lowscore", "text_score": 0.5, "box": box, "box_score": 0.9},
            ]
        ),
        "utf-8",
    )
    (raw / "images.txt").write_text(f"{images}/p1.png\n{images}/p2.png\n", "utf-8")
    return raw, work
