import json
import subprocess
import sys

import pytest

from conftest import build_pipeline_scenario, jsonl
from ftmap import cli, mapper, mockengine


@pytest.fixture
def scenario(tmp_path):
    return build_pipeline_scenario(tmp_path)


def run(argv):
    return cli.main([str(a) for a in argv])


class TestFullPipeline:
    def test_end_to_end(self, scenario, capsys):
        raw, work = scenario

        assert run(["ingest", "--photos", raw / "photos.jsonl",
                    "--footprints", raw / "footprints.geojson", "--out-dir", work]) == 0
        assert run(["filter-meta", "--out-dir", work]) == 0
        out = capsys.readouterr().out
        assert "stage=duplicate-position" in out and "dropped=2" in out

        assert run(["filter-content", "--out-dir", work,
                    "--features", raw / "features.jsonl", "--seeds", raw / "seeds.jsonl",
                    "--objects", raw / "objects.jsonl"]) == 0
        assert run(["match", "--out-dir", work]) == 0
        matches = mapper.read_matches(work / "matches.jsonl")
        assert {(m.photo_id, m.footprint_id) for m in matches} == {("p1", "b1"), ("p2", "b2")}
        assert all(
            m.intersection_distance == pytest.approx(5.0, abs=1e-6) for m in matches
        )

        assert mockengine.main(["--images", str(raw / "images.txt"),
                                "--out", str(work / "detections.jsonl")]) == 0
        assert run(["filter-str", "--out-dir", work]) == 0
        out = capsys.readouterr().out
        assert "stage=score" in out and "stage=stopword" in out and "stage=repetition" in out
        kept_lines = (work / "detections_kept.jsonl").read_text("utf-8").splitlines()
        assert len(kept_lines) == 2

        assert run(["classify", "--out-dir", work, "--year", "2026"]) == 0
        entries = mapper.read_text_entries(work / "classified.jsonl")
        by_text = {e.text: e.text_class.value for e in entries}
        assert by_text == {"Bäckerei": "non_numeric", "1907": "construction_year"}

        assert run(["aggregate", "--out-dir", work]) == 0
        out = capsys.readouterr().out
        assert "residential" in out and "commercial" in out
        assert "total" in out

        assert run(["export", "--out-dir", work, "--format", "geojson"]) == 0
        doc = json.loads((work / "map.geojson").read_text("utf-8"))
        assert len(doc["features"]) == 2
        assert run(["export", "--out-dir", work, "--format", "csv"]) == 0
        rows = (work / "map.csv").read_text("utf-8").splitlines()
        assert len(rows) == 3  # header + two texts

    def test_stage_rerun_is_byte_identical(self, scenario):
        raw, work = scenario
        assert run(["ingest", "--photos", raw / "photos.jsonl",
                    "--footprints", raw / "footprints.geojson", "--out-dir", work]) == 0
        first = (work / "photos.jsonl").read_bytes()
        assert run(["ingest", "--photos", raw / "photos.jsonl",
                    "--footprints", raw / "footprints.geojson", "--out-dir", work]) == 0
        assert (work / "photos.jsonl").read_bytes() == first


class TestConfig:
    def test_config_file_applies(self, scenario, capsys):
        raw, work = scenario
        mockengine.main(["--images", str(raw / "images.txt"),
                         "--out", str(raw / "detections.jsonl")])
        cfg = raw / "pipeline.cfg"
        cfg.write_text("text_threshold = 0.95\nout_dir = " + str(work) + "\n", "utf-8")
        assert run(["filter-str", "--config", cfg, "--dets", raw / "detections.jsonl"]) == 0
        # Raised threshold: only the 0.99-score "the" passes scoring, and
        # the stopword stage then removes it.
        out = capsys.readouterr().out
        assert "stage=score input=5 kept=1" in out
        kept = (work / "detections_kept.jsonl").read_text("utf-8").splitlines()
        assert kept == []

    def test_flag_beats_config(self, scenario):
        raw, work = scenario
        mockengine.main(["--images", str(raw / "images.txt"),
                         "--out", str(raw / "detections.jsonl")])
        cfg = raw / "pipeline.cfg"
        cfg.write_text(f"text_threshold = 0.95\nout_dir = {work}\n", "utf-8")
        assert run(["filter-str", "--config", cfg, "--dets", raw / "detections.jsonl",
                    "--text-threshold", "0.8"]) == 0
        kept = (work / "detections_kept.jsonl").read_text("utf-8").splitlines()
        assert len(kept) == 2

    def test_unknown_key_rejected(self, scenario, capsys):
        raw, work = scenario
        cfg = raw / "bad.cfg"
        cfg.write_text("no_such_knob = 1\n", "utf-8")
        assert run(["filter-str", "--config", cfg, "--dets", raw / "x.jsonl"]) == cli.EXIT_CONFIG

    def test_threshold_out_of_range_rejected(self, scenario):
        raw, work = scenario
        cfg = raw / "bad.cfg"
        cfg.write_text("text_threshold = 1.5\n", "utf-8")
        assert run(["filter-str", "--config", cfg, "--dets", raw / "x.jsonl"]) == cli.EXIT_CONFIG

    def test_missing_referenced_file_rejected(self, scenario):
        raw, work = scenario
        cfg = raw / "bad.cfg"
        cfg.write_text("stopwords = /no/such/file.txt\n", "utf-8")
        assert run(["filter-str", "--config", cfg, "--dets", raw / "x.jsonl"]) == cli.EXIT_CONFIG


class TestErrorCodes:
    def test_missing_input_is_2(self, tmp_path):
        assert run(["match", "--photos", tmp_path / "nope.jsonl",
                    "--footprints", tmp_path / "nope.geojson",
                    "--out", tmp_path / "m.jsonl"]) == cli.EXIT_MISSING_INPUT

    def test_malformed_data_is_4(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"photo_id": "p"}\n', "utf-8")
        assert run(["filter-str", "--dets", bad,
                    "--out", tmp_path / "out.jsonl"]) == cli.EXIT_VALIDATION

    def test_unwritable_output_is_5(self, scenario):
        raw, work = scenario
        mockengine.main(["--images", str(raw / "images.txt"),
                         "--out", str(raw / "detections.jsonl")])
        assert run(["filter-str", "--dets", raw / "detections.jsonl",
                    "--out", raw / "missing-dir" / "out.jsonl"]) == cli.EXIT_IO

    def test_bad_bbox_is_3(self, scenario):
        raw, work = scenario
        assert run(["ingest", "--endpoint", "http://127.0.0.1:1/x", "--bbox", "not-numbers",
                    "--footprints", raw / "footprints.geojson",
                    "--out-dir", work]) == cli.EXIT_CONFIG


class TestAuditSample:
    def make_dets(self, tmp_path, n=10):
        rows = [
            {"photo_id": f"p{i}", "text": f"Text{i}", "text_score": 0.9,
             "box": [[0, 0], [1, 0], [1, 1]], "box_score": 0.9}
            for i in range(n)
        ]
        path = tmp_path / "kept.jsonl"
        jsonl(path, rows)
        return path

    def test_reproducible(self, tmp_path, capsys):
        dets = self.make_dets(tmp_path)
        assert run(["audit-sample", "--dets", dets, "--n", "4", "--seed", "7"]) == 0
        first = capsys.readouterr().out
        assert run(["audit-sample", "--dets", dets, "--n", "4", "--seed", "7"]) == 0
        assert capsys.readouterr().out == first
        assert len(first.splitlines()) == 4

    def test_different_seed_differs(self, tmp_path, capsys):
        dets = self.make_dets(tmp_path)
        run(["audit-sample", "--dets", dets, "--n", "4", "--seed", "7"])
        first = capsys.readouterr().out
        run(["audit-sample", "--dets", dets, "--n", "4", "--seed", "8"])
        assert capsys.readouterr().out != first

    def test_oversized_sample_is_validation_error(self, tmp_path):
        dets = self.make_dets(tmp_path, n=3)
        assert run(["audit-sample", "--dets", dets, "--n", "99"]) == cli.EXIT_VALIDATION


class TestSynthEval:
    def test_small_run_prints_rate(self, capsys):
        assert run(["synth-eval", "--seeds", "25"]) == 0
        out = capsys.readouterr().out
        assert "agreement rate:" in out
        assert "scenes=25" in out


class TestMockEngine:
    def test_missing_list_is_2(self, tmp_path):
        assert mockengine.main(["--images", str(tmp_path / "nope.txt"),
                                "--out", str(tmp_path / "o.jsonl")]) == 2

    def test_image_without_sidecar_yields_nothing(self, tmp_path):
        img = tmp_path / "gray.png"
        img.write_bytes(b"")
        lst = tmp_path / "images.txt"
        lst.write_text(str(img) + "\n", "utf-8")
        out = tmp_path / "out.jsonl"
        assert mockengine.main(["--images", str(lst), "--out", str(out)]) == 0
        assert out.read_text("utf-8") == ""


def test_console_help_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "ftmap", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "aggregate" in proc.stdout
