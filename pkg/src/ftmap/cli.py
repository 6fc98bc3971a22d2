"""Command-line pipeline: one subcommand per stage, plain files between.

Every stage reads and writes the documented artifact formats, so any
stage can be re-run or audited in isolation; re-running a stage on the
same inputs produces byte-identical output.  Exit codes: 2 missing
inputs, 3 configuration, 4 data validation, 5 I/O.
"""

from __future__ import annotations

import argparse
import datetime
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import content, mapper, osm, photo, strpost, synth
from .config import PipelineConfig, load_config
from .errors import (
    AuthError,
    ConfigError,
    FtmapError,
    MalformedPageError,
    MissingInputError,
    ParseError,
    RetryExhaustedError,
    ValidationError,
)

EXIT_MISSING_INPUT = 2
EXIT_CONFIG = 3
EXIT_VALIDATION = 4
EXIT_IO = 5


def _require(path: str | None, what: str) -> Path:
    if path is None:
        raise MissingInputError(f"no {what} given (flag or config)")
    p = Path(path)
    if not p.exists():
        raise MissingInputError(f"{what} {p} does not exist")
    return p


def _resolve_in(flag_value: str | None, config_value: str | None, default_name: str | None,
                config: PipelineConfig, what: str) -> Path:
    """Stage input: explicit flag, then config key, then out_dir default."""
    value = flag_value or config_value
    if value is None and default_name is not None and config.out_dir is not None:
        value = str(Path(config.out_dir) / default_name)
    return _require(value, what)


def _resolve_out(flag_value: str | None, default_name: str, config: PipelineConfig) -> Path:
    if flag_value is not None:
        return Path(flag_value)
    if config.out_dir is not None:
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return out_dir / default_name
    raise MissingInputError(f"no --out given and no out_dir configured (wanted {default_name})")


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    overrides = {}
    for key in PipelineConfig.__dataclass_fields__:
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    return load_config(getattr(args, "config", None), overrides)


def _function_table(config: PipelineConfig) -> osm.FunctionTable:
    if config.mapping_table:
        return osm.load_function_table(config.mapping_table)
    return osm.default_function_table()


def _stopword_lists(config: PipelineConfig) -> strpost.StopwordLists:
    if config.stopwords:
        paths = {Path(p).stem: p for p in config.stopwords.split(",") if p}
        return strpost.load_stopword_lists(paths)
    return strpost.load_stopword_lists()


def _allowlist(config: PipelineConfig) -> frozenset[str]:
    if config.allowlist:
        return strpost.load_token_file(config.allowlist)
    return strpost.load_bundled_allowlist()


def _parse_bbox(text: str) -> tuple[float, float, float, float]:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"bbox {text!r} is not four comma-separated numbers")
    if len(parts) != 4:
        raise ConfigError(f"bbox {text!r} needs exactly minlon,minlat,maxlon,maxlat")
    return parts[0], parts[1], parts[2], parts[3]


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    table = _function_table(config)
    if args.endpoint or config.endpoint:
        endpoint = args.endpoint or config.endpoint
        bbox_text = args.bbox or config.bbox
        if bbox_text is None:
            raise ConfigError("endpoint ingest needs --bbox")
        records = photo.fetch_photo_metadata(
            endpoint, _parse_bbox(bbox_text), page_size=config.page_size
        )
        photo_skips = 0
    else:
        photos_path = _require(args.photos or config.photos, "photo metadata file")
        records, photo_skips = photo.parse_photo_records(photos_path)
        records.sort(key=lambda r: r.id)
    footprints_path = _require(args.footprints or config.footprints, "footprint file")
    footprints, fp_skips = osm.parse_footprints(footprints_path, table)

    photos_out = _resolve_out(args.photos_out, "photos.jsonl", config)
    footprints_out = _resolve_out(args.footprints_out, "footprints.geojson", config)
    photo.write_photo_records(records, photos_out)
    osm.write_footprints_geojson(footprints, footprints_out)
    print(f"photos: {len(records)} kept, {photo_skips} skipped -> {photos_out}")
    print(f"footprints: {len(footprints)} kept, {fp_skips} skipped -> {footprints_out}")
    return 0


def cmd_filter_meta(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    photos_path = _resolve_in(args.photos, None, "photos.jsonl", config, "photo artifact")
    records, _ = photo.parse_photo_records(photos_path)
    kept, dup_report = photo.filter_duplicate_positions(
        records, per_uploader=config.duplicate_per_uploader
    )
    kept, dir_report = photo.filter_missing_direction(kept)
    out = _resolve_out(args.out, "photos_meta.jsonl", config)
    photo.write_photo_records(kept, out)
    print(dup_report.line())
    print(dir_report.line())
    print(f"kept {len(kept)} photos -> {out}")
    return 0


def cmd_filter_content(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    photos_path = _resolve_in(args.photos, None, "photos_meta.jsonl", config, "photo artifact")
    features_path = _require(args.features or config.features, "feature-vector file")
    seeds_path = _require(args.seeds or config.seeds, "seed feature-vector file")
    objects_path = _require(args.objects or config.objects, "detected-object file")
    records, _ = photo.parse_photo_records(photos_path)
    vectors = content.read_feature_vectors(features_path)
    seeds = content.read_feature_vectors(seeds_path)
    objects = content.group_objects_by_photo(content.read_detected_objects(objects_path))

    similar_ids = content.similarity_filter(vectors, seeds, config.similarity_threshold)
    after_sim = [r for r in records if r.id in similar_ids]
    sim_report = photo.FilterReport(
        stage="similarity",
        input_count=len(records),
        kept_count=len(after_sim),
        dropped_count=len(records) - len(after_sim),
    )
    labels = config.label_set()
    kept = [
        r
        for r in after_sim
        if content.detection_filter(
            objects.get(r.id, []),
            config.size_threshold,
            config.confidence_threshold,
            labels=labels,
        )
    ]
    det_report = photo.FilterReport(
        stage="detection",
        input_count=len(after_sim),
        kept_count=len(kept),
        dropped_count=len(after_sim) - len(kept),
    )
    out = _resolve_out(args.out, "photos_content.jsonl", config)
    photo.write_photo_records(kept, out)
    print(sim_report.line())
    print(det_report.line())
    print(f"kept {len(kept)} photos -> {out}")
    return 0


def cmd_match(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    photos_path = _resolve_in(args.photos, None, "photos_content.jsonl", config, "photo artifact")
    footprints_path = _resolve_in(
        args.footprints, config.footprints, "footprints.geojson", config, "footprint artifact"
    )
    records, _ = photo.parse_photo_records(photos_path)
    footprints, _ = osm.parse_footprints(footprints_path, _function_table(config))
    eligible = sorted(
        (r for r in records if r.position is not None and r.direction is not None),
        key=lambda r: r.id,
    )
    skipped = len(records) - len(eligible)

    def run(rec: photo.PhotoRecord) -> mapper.MatchResult:
        return mapper.match_image_to_building(
            rec,
            footprints,
            config.max_range,
            distance_mode=config.distance_mode,
            count_out_of_range=config.count_out_of_range,
        )

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run, eligible))
    else:
        results = [run(r) for r in eligible]
    out = _resolve_out(args.out, "matches.jsonl", config)
    mapper.write_matches(results, out)
    matched = sum(1 for m in results if m.footprint_id is not None)
    print(f"matched {matched} of {len(eligible)} photos (skipped {skipped} without sight line)")
    print(f"matches -> {out}")
    return 0


def cmd_filter_str(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    dets_path = _resolve_in(args.dets, config.detections, "detections.jsonl", config,
                            "detection file")
    dets = strpost.read_detections(dets_path)
    str_config = strpost.StrFilterConfig(
        text_threshold=config.text_threshold,
        box_threshold=config.box_threshold,
        stopwords=_stopword_lists(config),
        stopword_case_sensitive=config.stopword_case_sensitive,
        allowlist=_allowlist(config),
    )
    kept, reports = strpost.filter_pipeline(dets, str_config)
    out = _resolve_out(args.out, "detections_kept.jsonl", config)
    strpost.write_detections(kept, out)
    for report in reports:
        print(report.line())
    print(f"kept {len(kept)} detections -> {out}")
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    dets_path = _resolve_in(args.dets, None, "detections_kept.jsonl", config,
                            "detection artifact")
    dets = strpost.read_detections(dets_path)
    year = config.current_year or datetime.date.today().year
    entries = [
        mapper.TextEntry(
            photo_id=d.photo_id,
            text=d.text,
            text_class=mapper.classify_numeric_text(d.text, year),
        )
        for d in dets
    ]
    out = _resolve_out(args.out, "classified.jsonl", config)
    mapper.write_text_entries(entries, out)
    tally: dict[str, int] = {}
    for e in entries:
        tally[e.text_class.value] = tally.get(e.text_class.value, 0) + 1
    for name in sorted(tally):
        print(f"{name}: {tally[name]}")
    print(f"classified {len(entries)} texts (year window ends {year}) -> {out}")
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    matches_path = _resolve_in(args.matches, config.matches, "matches.jsonl", config, "match artifact")
    dets_path = _resolve_in(args.dets, None, "detections_kept.jsonl", config,
                            "detection artifact")
    footprints_path = _resolve_in(
        args.footprints, config.footprints, "footprints.geojson", config, "footprint artifact"
    )
    matches = mapper.read_matches(matches_path)
    dets = strpost.read_detections(dets_path)
    footprints, _ = osm.parse_footprints(footprints_path, _function_table(config))
    by_id = {fp.id: fp for fp in footprints}
    agg = mapper.aggregate_by_function(matches, {d.photo_id for d in dets}, by_id)

    total_images, total_with_text = agg.totals()
    print(f"{'building type':<14}{'images':>8}{'with text':>11}")
    for cls in mapper.TABLE_CLASSES:
        images, with_text = agg.rows[cls]
        print(f"{cls.value:<14}{images:>8}{with_text:>11}")
    print(f"{'total':<14}{total_images:>8}{total_with_text:>11}")
    shares = "  ".join(
        f"{cls.value} {100.0 * agg.class_share(cls):.2f}%" for cls in mapper.TABLE_CLASSES
    )
    print(f"class shares: {shares}")
    print(f"with-text ratio: {100.0 * agg.with_text_ratio():.1f}%")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    matches_path = _resolve_in(args.matches, config.matches, "matches.jsonl", config, "match artifact")
    classified_path = _resolve_in(args.classified, config.classified, "classified.jsonl",
                                  config, "classified-text artifact")
    footprints_path = _resolve_in(
        args.footprints, config.footprints, "footprints.geojson", config, "footprint artifact"
    )
    matches = mapper.read_matches(matches_path)
    entries = mapper.read_text_entries(classified_path)
    footprints, _ = osm.parse_footprints(footprints_path, _function_table(config))
    by_id = {fp.id: fp for fp in footprints}
    records = mapper.build_attribute_records(matches, entries, by_id)
    default_name = "map.geojson" if args.format == "geojson" else "map.csv"
    out = _resolve_out(args.out, default_name, config)
    mapper.export_map(records, by_id, out, args.format)
    print(f"exported {len(records)} buildings -> {out}")
    return 0


def cmd_synth_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    result = synth.evaluate_matching(
        range(args.seeds),
        n_buildings=args.buildings,
        area=args.area,
        max_range=config.max_range,
        step=args.step,
    )
    print(
        f"scenes={result.scenes} knife_edges={result.knife_edges} "
        f"eligible={result.eligible} agreements={result.agreements}"
    )
    print(f"agreement rate: {result.agreement_rate:.4f}")
    if result.disagreements:
        print(f"disagreeing seeds: {', '.join(str(s) for s in result.disagreements)}")
    return 0


def cmd_audit_sample(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    dets_path = _resolve_in(args.dets, None, "detections_kept.jsonl", config,
                            "detection artifact")
    lines = [ln for ln in Path(dets_path).read_text("utf-8").splitlines() if ln.strip()]
    if args.n > len(lines):
        raise ValidationError(f"asked for {args.n} samples but only {len(lines)} detections exist")
    rng = random.Random(args.seed)
    for line in rng.sample(lines, args.n):
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftmap",
        description="Building-attribute mapping pipeline over crowdsourced street photos.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file; flags override it")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common],
                       help="normalize photo metadata and footprints into pipeline artifacts")
    p.add_argument("--photos", help="photo metadata JSONL file")
    p.add_argument("--endpoint", help="paged metadata endpoint (instead of --photos)")
    p.add_argument("--bbox", help="minlon,minlat,maxlon,maxlat for endpoint queries")
    p.add_argument("--footprints", help="footprint GeoJSON or OSM-XML file")
    p.add_argument("--photos-out", help="output photo artifact path")
    p.add_argument("--footprints-out", help="output footprint artifact path")
    p.add_argument("--out-dir", dest="out_dir", help="directory for default artifact names")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("filter-meta", parents=[common],
                       help="drop duplicate-position photos and photos without a sight line")
    p.add_argument("--photos", help="photo artifact (default: <out_dir>/photos.jsonl)")
    p.add_argument("--out", help="output path (default: <out_dir>/photos_meta.jsonl)")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--per-uploader", dest="duplicate_per_uploader", action="store_const",
                   const=True, help="only treat same-position photos of one uploader as duplicates")
    p.set_defaults(func=cmd_filter_meta)

    p = sub.add_parser("filter-content", parents=[common],
                       help="keep photos that look like street scenes and show a building")
    p.add_argument("--photos", help="photo artifact (default: <out_dir>/photos_meta.jsonl)")
    p.add_argument("--features", help="photo feature-vector JSONL")
    p.add_argument("--seeds", help="seed feature-vector JSONL")
    p.add_argument("--objects", help="detected-object JSONL")
    p.add_argument("--out", help="output path (default: <out_dir>/photos_content.jsonl)")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--similarity-threshold", dest="similarity_threshold", type=float,
                   help="min best-seed cosine similarity (heuristic default: 0.7)")
    p.add_argument("--size-threshold", dest="size_threshold", type=float,
                   help="min building area fraction, strict (heuristic default: 0.1)")
    p.add_argument("--confidence-threshold", dest="confidence_threshold", type=float,
                   help="min building detection confidence, strict (heuristic default: 0.8)")
    p.set_defaults(func=cmd_filter_content)

    p = sub.add_parser("match", parents=[common],
                       help="match each photo to the footprint its sight ray hits first")
    p.add_argument("--photos", help="photo artifact (default: <out_dir>/photos_content.jsonl)")
    p.add_argument("--footprints", help="footprint artifact (default: <out_dir>/footprints.geojson)")
    p.add_argument("--out", help="output path (default: <out_dir>/matches.jsonl)")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--max-range", dest="max_range", type=float,
                   help="sight-line reach in meters (heuristic default: 200)")
    p.add_argument("--distance-mode", dest="distance_mode", choices=["ray", "centroid"],
                   help="pick nearest by ray intersection (default) or by centroid distance")
    p.add_argument("--workers", dest="workers", type=int, help="worker threads (default: 1)")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("filter-str", parents=[common],
                       help="filter recognized texts by scores, stopwords, and repetition")
    p.add_argument("--dets", help="raw detection JSONL")
    p.add_argument("--out", help="output path (default: <out_dir>/detections_kept.jsonl)")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--text-threshold", dest="text_threshold", type=float,
                   help="min text score, strict (default: 0.8)")
    p.add_argument("--box-threshold", dest="box_threshold", type=float,
                   help="min box score, strict (default: 0.8)")
    p.add_argument("--stopwords", dest="stopwords",
                   help="comma-separated stopword files (default: bundled en+de)")
    p.add_argument("--allowlist", dest="allowlist",
                   help="repetition allowlist file (default: bundled)")
    p.set_defaults(func=cmd_filter_str)

    p = sub.add_parser("classify", parents=[common],
                       help="classify kept texts into house number / construction year / other")
    p.add_argument("--dets", help="kept detection artifact (default: <out_dir>/detections_kept.jsonl)")
    p.add_argument("--out", help="output path (default: <out_dir>/classified.jsonl)")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--year", dest="current_year", type=int,
                   help="upper bound for construction years (default: current year)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("aggregate", parents=[common],
                       help="print per-function image counts and text coverage")
    p.add_argument("--matches", help="match artifact (default: <out_dir>/matches.jsonl)")
    p.add_argument("--dets", help="kept detection artifact (default: <out_dir>/detections_kept.jsonl)")
    p.add_argument("--footprints", help="footprint artifact (default: <out_dir>/footprints.geojson)")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("export", parents=[common],
                       help="write the per-building attribute map")
    p.add_argument("--matches", help="match artifact (default: <out_dir>/matches.jsonl)")
    p.add_argument("--classified", help="classified-text artifact (default: <out_dir>/classified.jsonl)")
    p.add_argument("--footprints", help="footprint artifact (default: <out_dir>/footprints.geojson)")
    p.add_argument("--format", choices=["geojson", "csv"], default="geojson")
    p.add_argument("--out", help="output path (default: <out_dir>/map.<format>)")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("synth-eval", parents=[common],
                       help="cross-check the matcher against a marching oracle on random scenes")
    p.add_argument("--seeds", type=int, default=1000, help="number of seeded scenes")
    p.add_argument("--buildings", type=int, default=12, help="buildings per scene")
    p.add_argument("--area", type=float, default=synth.DEFAULT_AREA_M, help="scene side in meters")
    p.add_argument("--step", type=float, default=synth.MARCH_STEP_M, help="oracle step in meters")
    p.add_argument("--max-range", dest="max_range", type=float, help="sight-line reach in meters")
    p.set_defaults(func=cmd_synth_eval)

    p = sub.add_parser("audit-sample", parents=[common],
                       help="print a reproducible random sample of kept detections")
    p.add_argument("--dets", help="kept detection artifact (default: <out_dir>/detections_kept.jsonl)")
    p.add_argument("--n", type=int, default=32, help="sample size")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_audit_sample)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MissingInputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (ConfigError, AuthError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValidationError, ParseError, MalformedPageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, RetryExhaustedError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except FtmapError as e:  # anything package-specific not mapped above
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
