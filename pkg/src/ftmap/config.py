"""Pipeline configuration: a key=value text file, overridden by CLI flags."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

_FLOAT_KEYS = {
    "similarity_threshold",
    "size_threshold",
    "confidence_threshold",
    "text_threshold",
    "box_threshold",
    "max_range",
}
_BOOL_KEYS = {"duplicate_per_uploader", "count_out_of_range", "stopword_case_sensitive"}
_INT_KEYS = {"workers", "current_year", "page_size"}
_PATH_KEYS = {
    "stopwords",
    "allowlist",
    "mapping_table",
    "photos",
    "footprints",
    "features",
    "seeds",
    "objects",
    "detections",
    "matches",
    "classified",
    "out_dir",
}
_STR_KEYS = {"distance_mode", "detector_labels", "endpoint", "bbox"}

_THRESHOLD_KEYS = {
    "similarity_threshold",
    "size_threshold",
    "confidence_threshold",
    "text_threshold",
    "box_threshold",
}

# Auxiliary files that must exist the moment the config is loaded.
_MUST_EXIST_KEYS = ("stopwords", "allowlist", "mapping_table")


@dataclass
class PipelineConfig:
    """Every tunable of the pipeline, with its default.

    The two score thresholds default to the published 0.8 cut; the other
    thresholds and the sight-line range are heuristic defaults meant to
    be tuned per dataset.
    """

    similarity_threshold: float = 0.7
    size_threshold: float = 0.1
    confidence_threshold: float = 0.8
    text_threshold: float = 0.8
    box_threshold: float = 0.8
    max_range: float = 200.0
    duplicate_per_uploader: bool = False
    count_out_of_range: bool = False
    stopword_case_sensitive: bool = False
    distance_mode: str = "ray"
    detector_labels: str = "house,building"
    workers: int = 1
    current_year: int | None = None
    page_size: int = 250
    endpoint: str | None = None
    bbox: str | None = None
    stopwords: str | None = None  # comma-separated files; language = file stem
    allowlist: str | None = None
    mapping_table: str | None = None
    photos: str | None = None
    footprints: str | None = None
    features: str | None = None
    seeds: str | None = None
    objects: str | None = None
    detections: str | None = None
    matches: str | None = None
    classified: str | None = None
    out_dir: str | None = None

    def validate(self) -> None:
        for key in _THRESHOLD_KEYS:
            value = getattr(self, key)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{key} = {value} outside [0, 1]")
        if self.max_range <= 0:
            raise ConfigError(f"max_range = {self.max_range} must be > 0")
        if self.distance_mode not in ("ray", "centroid"):
            raise ConfigError(f"distance_mode = {self.distance_mode!r} (expected ray or centroid)")
        if self.workers < 1:
            raise ConfigError(f"workers = {self.workers} must be >= 1")
        for key in _MUST_EXIST_KEYS:
            value = getattr(self, key)
            if value is None:
                continue
            for part in str(value).split(","):
                if part and not Path(part).exists():
                    raise ConfigError(f"{key}: referenced file {part} does not exist")

    def label_set(self) -> frozenset[str]:
        return frozenset(s.strip() for s in self.detector_labels.split(",") if s.strip())


_ALL_KEYS = _FLOAT_KEYS | _BOOL_KEYS | _INT_KEYS | _PATH_KEYS | _STR_KEYS


def _coerce(key: str, value: str):
    try:
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _INT_KEYS:
            return int(value)
        if key in _BOOL_KEYS:
            lowered = value.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {value!r}")
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {e}")
    return value


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; # starts a comment."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"{source}: line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    return values


def load_config(path: str | Path | None, overrides: dict) -> PipelineConfig:
    """Merge defaults, config-file values, and CLI flag overrides.

    A flag always wins over the file; ``None`` overrides are ignored.
    """
    values: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
        values.update(parse_config_text(p.read_text("utf-8"), str(p)))
    field_names = {f.name for f in fields(PipelineConfig)}
    for key, value in overrides.items():
        if value is not None:
            if key not in field_names:
                raise ConfigError(f"unknown config override {key!r}")
            values[key] = value
    config = PipelineConfig(**values)
    config.validate()
    return config
