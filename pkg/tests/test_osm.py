import itertools
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftmap import osm
from ftmap.errors import ParseError
from ftmap.osm import FunctionClass


def feature(fid, ring_lonlat, props):
    ring = [list(p) for p in ring_lonlat]
    if ring[0] != ring[-1]:
        ring.append(ring[0])
    return {
        "type": "Feature",
        "id": fid,
        "properties": props,
        "geometry": {"type": "Polygon", "coordinates": [ring]},
    }


SQUARE = [(13.4, 52.5), (13.4005, 52.5), (13.4005, 52.5005), (13.4, 52.5005)]


def write_collection(path, features):
    path.write_text(json.dumps({"type": "FeatureCollection", "features": features}), "utf-8")


class TestParseGeojson:
    def test_single_polygon(self, tmp_path):
        f = tmp_path / "one.geojson"
        write_collection(f, [feature("w1", SQUARE, {"building": "apartments"})])
        footprints, skipped = osm.parse_footprints(f)
        assert skipped == 0
        assert len(footprints) == 1
        fp = footprints[0]
        assert fp.id == "w1"
        assert fp.tags == {"building": "apartments"}
        assert fp.function is FunctionClass.RESIDENTIAL
        assert len(fp.ring) == 4  # closing duplicate removed

    def test_two_point_ring_skipped(self, tmp_path):
        f = tmp_path / "degenerate.geojson"
        write_collection(f, [feature("w1", [(13.4, 52.5), (13.41, 52.5)], {})])
        footprints, skipped = osm.parse_footprints(f)
        assert footprints == []
        assert skipped == 1

    def test_three_valid_one_degenerate(self, tmp_path):
        f = tmp_path / "mixed.geojson"
        good = [
            feature(f"w{i}", [(lon, lat) for lon, lat in SQUARE], {"building": "house"})
            for i in range(3)
        ]
        bad = feature("broken", [(13.4, 52.5), (13.4, 52.5), (13.4, 52.5)], {})
        write_collection(f, good + [bad])
        footprints, skipped = osm.parse_footprints(f)
        assert len(footprints) == 3
        assert skipped == 1

    def test_multipolygon_outer_ring(self, tmp_path):
        f = tmp_path / "multi.geojson"
        ring = [list(p) for p in SQUARE] + [list(SQUARE[0])]
        hole = [[13.4001, 52.5001], [13.4002, 52.5001], [13.4002, 52.5002], [13.40001, 52.50002], [13.4001, 52.5001]]
        doc = {
            "type": "FeatureCollection",
            "features": [
                {
                    "type": "Feature",
                    "id": "m1",
                    "properties": {"building": "retail"},
                    "geometry": {"type": "MultiPolygon", "coordinates": [[ring, hole]]},
                }
            ],
        }
        f.write_text(json.dumps(doc), "utf-8")
        footprints, skipped = osm.parse_footprints(f)
        assert len(footprints) == 1
        assert len(footprints[0].ring) == 4

    def test_malformed_json_names_offset(self, tmp_path):
        f = tmp_path / "broken.geojson"
        f.write_text('{"type": "FeatureCollection", "features": [}', "utf-8")
        with pytest.raises(ParseError, match=r"line \d+ column \d+"):
            osm.parse_footprints(f)

    def test_unknown_format(self, tmp_path):
        f = tmp_path / "weird.txt"
        f.write_text("not a footprint file", "utf-8")
        with pytest.raises(ParseError, match="byte"):
            osm.parse_footprints(f)

    @pytest.mark.parametrize(
        "doc",
        [
            {"type": "FeatureCollection", "features": 5},
            {"type": "FeatureCollection", "features": ["not-an-object"]},
            {"type": "FeatureCollection", "features": [{"geometry": "nope"}]},
            {
                "type": "FeatureCollection",
                "features": [
                    {
                        "geometry": {
                            "type": "Polygon",
                            "coordinates": [[[13.4, 52.5], [13.41, 52.5], [13.41, 52.51], [13.4, 52.5]]],
                        },
                        "properties": "nope",
                    }
                ],
            },
        ],
    )
    def test_structurally_broken_collections(self, tmp_path, doc):
        f = tmp_path / "broken.geojson"
        f.write_text(json.dumps(doc), "utf-8")
        with pytest.raises(ParseError):
            osm.parse_footprints(f)

    def test_duplicate_ids_rejected(self, tmp_path):
        f = tmp_path / "dup.geojson"
        write_collection(f, [feature("w1", SQUARE, {}), feature("w1", SQUARE, {})])
        with pytest.raises(ParseError, match="duplicate"):
            osm.parse_footprints(f)


class TestParseOsmXml:
    def test_way_with_tags(self, tmp_path):
        f = tmp_path / "map.osm"
        f.write_text(
            """<?xml version="1.0"?>
<osm>
  <node id="1" lat="52.5" lon="13.4"/>
  <node id="2" lat="52.5" lon="13.4005"/>
  <node id="3" lat="52.5005" lon="13.4005"/>
  <node id="4" lat="52.5005" lon="13.4"/>
  <way id="100">
    <nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="4"/><nd ref="1"/>
    <tag k="building" v="hotel"/>
  </way>
</osm>
""",
            "utf-8",
        )
        footprints, skipped = osm.parse_footprints(f)
        assert skipped == 0
        assert len(footprints) == 1
        assert footprints[0].id == "100"
        assert footprints[0].function is FunctionClass.COMMERCIAL

    def test_invalid_xml_names_position(self, tmp_path):
        f = tmp_path / "broken.osm"
        f.write_text("<osm><way id='1'>", "utf-8")
        with pytest.raises(ParseError, match=r"line \d+ column \d+"):
            osm.parse_footprints(f)


class TestClassifyTag:
    @pytest.mark.parametrize(
        "key,value,expected",
        [
            ("building", "apartments", FunctionClass.RESIDENTIAL),
            ("shop", "bakery", FunctionClass.COMMERCIAL),
            ("shop", "anything_else", FunctionClass.COMMERCIAL),  # wildcard row
            ("shop", "no", None),
            ("building", "yes", None),
            ("building", "never_heard_of_it", None),
            ("amenity", "library", FunctionClass.OTHER),
            ("color", "red", None),  # non-voting key
        ],
    )
    def test_votes(self, key, value, expected):
        assert osm.classify_tag(key, value) is expected


class TestAggregateFunction:
    def test_single_tag(self):
        assert osm.aggregate_function({"building": "apartments"}) is FunctionClass.RESIDENTIAL

    def test_disagreement_unmapped(self):
        result = osm.aggregate_function({"building": "apartments", "shop": "bakery"})
        assert result is FunctionClass.UNMAPPED

    def test_agreement(self):
        result = osm.aggregate_function({"building": "retail", "shop": "supermarket"})
        assert result is FunctionClass.COMMERCIAL

    def test_no_votes_unmapped(self):
        assert osm.aggregate_function({}) is FunctionClass.UNMAPPED
        assert osm.aggregate_function({"building": "yes"}) is FunctionClass.UNMAPPED

    def test_permutation_invariant(self):
        tags = [("building", "retail"), ("shop", "clothes"), ("amenity", "cafe"), ("name", "X")]
        results = set()
        for perm in itertools.permutations(tags):
            results.add(osm.aggregate_function(dict(perm)))
        assert len(results) == 1

    def test_single_vote_never_unmapped(self):
        table = osm.default_function_table()
        for (key, value), cls in table.exact.items():
            if cls is None:
                continue
            assert osm.aggregate_function({key: value}) is cls


tag_maps = st.dictionaries(
    st.sampled_from(["building", "amenity", "shop", "name", "height"]),
    st.sampled_from(["apartments", "retail", "bakery", "yes", "no", "church", "cafe", "x"]),
    max_size=5,
)


@given(tags=tag_maps)
def test_aggregate_total_over_tag_maps(tags):
    assert osm.aggregate_function(tags) in FunctionClass


class TestRoundTrip:
    def test_ids_and_tags_lossless(self, tmp_path):
        f = tmp_path / "in.geojson"
        write_collection(
            f,
            [
                feature("a", SQUARE, {"building": "apartments", "name": "Haus Eins"}),
                feature("b", SQUARE, {"shop": "bakery", "addr:street": "Unter den Linden"}),
            ],
        )
        first, _ = osm.parse_footprints(f)
        out = tmp_path / "out.geojson"
        osm.write_footprints_geojson(first, out)
        second, _ = osm.parse_footprints(out)
        assert [(fp.id, fp.tags, fp.ring) for fp in first] == [
            (fp.id, fp.tags, fp.ring) for fp in second
        ]

    def test_writer_is_stable(self, tmp_path):
        f = tmp_path / "in.geojson"
        write_collection(f, [feature("a", SQUARE, {"building": "house"})])
        footprints, _ = osm.parse_footprints(f)
        out1 = tmp_path / "out1.geojson"
        out2 = tmp_path / "out2.geojson"
        osm.write_footprints_geojson(footprints, out1)
        osm.write_footprints_geojson(footprints, out2)
        assert out1.read_bytes() == out2.read_bytes()
