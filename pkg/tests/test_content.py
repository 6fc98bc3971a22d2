import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftmap import content
from ftmap.content import DetectedObject, FeatureVector
from ftmap.errors import ValidationError


def vec(pid, *values):
    return FeatureVector(photo_id=pid, values=values)


class TestCosine:
    def test_identical(self):
        assert content.cosine_similarity(vec("a", 3, 4), vec("b", 3, 4)) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert content.cosine_similarity(vec("a", 1, 0), vec("b", 0, 1)) == 0.0

    def test_45_degrees(self):
        # Frozen: 1/sqrt(2) = 0.7071067811865475
        sim = content.cosine_similarity(vec("a", 1, 0), vec("b", 1, 1))
        assert sim == pytest.approx(0.70711, abs=1e-5)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            content.cosine_similarity(vec("a", 1, 0), vec("b", 1, 0, 0))

    def test_zero_vector_rejected_at_construction(self):
        with pytest.raises(ValidationError):
            vec("a", 0, 0)

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            vec("a", 1.0, float("inf"))


vectors = st.lists(st.floats(-100.0, 100.0), min_size=3, max_size=3).filter(
    lambda v: any(abs(x) > 1e-6 for x in v)
)


@given(a=vectors, b=vectors, lam=st.floats(0.001, 1000.0))
@settings(max_examples=200)
def test_cosine_symmetric_and_scale_invariant(a, b, lam):
    va, vb = vec("a", *a), vec("b", *b)
    sim = content.cosine_similarity(va, vb)
    assert content.cosine_similarity(vb, va) == pytest.approx(sim, abs=1e-12)
    scaled = vec("a", *(lam * x for x in a))
    assert content.cosine_similarity(scaled, vb) == pytest.approx(sim, abs=1e-9)


class TestSimilarityFilter:
    def test_identical_to_seed_kept(self):
        kept = content.similarity_filter([vec("p", 3, 4)], [vec("s", 3, 4)], threshold=0.9)
        assert kept == {"p"}

    def test_orthogonal_dropped(self):
        kept = content.similarity_filter([vec("p", 1, 0)], [vec("s", 0, 1)], threshold=0.5)
        assert kept == set()

    def test_boundary_is_inclusive(self):
        photos = [vec("p", 1, 0)]
        seeds = [vec("s", 1, 1)]  # similarity 0.70710678...
        assert content.similarity_filter(photos, seeds, threshold=0.7) == {"p"}
        assert content.similarity_filter(photos, seeds, threshold=0.71) == set()

    def test_empty_seeds_rejected(self):
        with pytest.raises(ValidationError):
            content.similarity_filter([vec("p", 1, 0)], [], threshold=0.5)

    @given(
        photos=st.lists(vectors, max_size=6),
        seeds=st.lists(vectors, min_size=1, max_size=3),
        extra=vectors,
        t1=st.floats(-1.0, 1.0),
        t2=st.floats(-1.0, 1.0),
    )
    @settings(max_examples=100)
    def test_monotone_in_threshold_and_seeds(self, photos, seeds, extra, t1, t2):
        pvecs = [vec(f"p{i}", *v) for i, v in enumerate(photos)]
        svecs = [vec(f"s{i}", *v) for i, v in enumerate(seeds)]
        low, high = min(t1, t2), max(t1, t2)
        assert content.similarity_filter(pvecs, svecs, high) <= content.similarity_filter(
            pvecs, svecs, low
        )
        more_seeds = svecs + [vec("extra", *extra)]
        assert content.similarity_filter(pvecs, svecs, low) <= content.similarity_filter(
            pvecs, more_seeds, low
        )


def obj(label, conf, size, pid="p"):
    return DetectedObject(photo_id=pid, label=label, confidence=conf, size=size)


class TestDetectionFilter:
    def test_qualifying_building(self):
        assert content.detection_filter([obj("building", 0.95, 0.40)], 0.2, 0.8) is True

    def test_label_gate(self):
        assert content.detection_filter([obj("car", 0.99, 0.5)], 0.2, 0.8) is False

    def test_strict_at_boundary(self):
        assert content.detection_filter([obj("house", 0.8, 0.2)], 0.2, 0.8) is False

    def test_empty_objects(self):
        assert content.detection_filter([], 0.2, 0.8) is False

    def test_custom_labels(self):
        assert content.detection_filter(
            [obj("hut", 0.9, 0.5)], 0.2, 0.8, labels=frozenset({"hut"})
        )

    def test_threshold_range_validated(self):
        with pytest.raises(ValidationError):
            content.detection_filter([], 1.5, 0.5)

    @given(
        objects=st.lists(
            st.builds(
                obj,
                label=st.sampled_from(["house", "building", "car"]),
                conf=st.floats(0.0, 1.0),
                size=st.floats(0.01, 1.0),
            ),
            max_size=6,
        ),
        s1=st.floats(0.0, 1.0),
        s2=st.floats(0.0, 1.0),
        c1=st.floats(0.0, 1.0),
        c2=st.floats(0.0, 1.0),
    )
    @settings(max_examples=100)
    def test_monotone_in_both_thresholds(self, objects, s1, s2, c1, c2):
        s_low, s_high = min(s1, s2), max(s1, s2)
        c_low, c_high = min(c1, c2), max(c1, c2)
        if content.detection_filter(objects, s_high, c_high):
            assert content.detection_filter(objects, s_low, c_low)


class TestObjectValidation:
    def test_confidence_range(self):
        with pytest.raises(ValidationError):
            obj("house", 1.1, 0.5)

    def test_size_range(self):
        with pytest.raises(ValidationError):
            obj("house", 0.5, 0.0)


class TestReaders:
    def test_feature_file(self, tmp_path):
        f = tmp_path / "features.jsonl"
        f.write_text('{"photo_id": "a", "values": [1.0, 2.0]}\n', "utf-8")
        vectors = content.read_feature_vectors(f)
        assert vectors[0].values == (1.0, 2.0)

    def test_feature_file_malformed(self, tmp_path):
        from ftmap.errors import ParseError

        f = tmp_path / "features.jsonl"
        f.write_text('{"photo_id": "a"}\n', "utf-8")
        with pytest.raises(ParseError, match="line 1"):
            content.read_feature_vectors(f)

    def test_object_file(self, tmp_path):
        f = tmp_path / "objects.jsonl"
        f.write_text(
            '{"photo_id": "a", "label": "house", "confidence": 0.9, "size": 0.4}\n', "utf-8"
        )
        objects = content.read_detected_objects(f)
        assert objects[0].label == "house"
        grouped = content.group_objects_by_photo(objects)
        assert set(grouped) == {"a"}
