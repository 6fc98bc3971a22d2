"""Content filters over precomputed records.

Feature vectors (from whatever network produced them) are matched against
a seed set by cosine similarity, and per-photo object-detection records
gate on the presence of a big-enough, confident-enough house or building.
No model runs here; both inputs arrive as JSONL files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ParseError, ValidationError

DEFAULT_BUILDING_LABELS = frozenset({"house", "building"})


@dataclass(frozen=True)
class FeatureVector:
    photo_id: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValidationError(f"feature vector {self.photo_id}: empty")
        if not all(math.isfinite(v) for v in self.values):
            raise ValidationError(f"feature vector {self.photo_id}: non-finite value")
        if all(v == 0.0 for v in self.values):
            raise ValidationError(f"feature vector {self.photo_id}: zero norm")


@dataclass(frozen=True)
class DetectedObject:
    photo_id: str
    label: str
    confidence: float
    size: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"object {self.photo_id}/{self.label}: confidence {self.confidence}")
        if not 0.0 < self.size <= 1.0:
            raise ValidationError(f"object {self.photo_id}/{self.label}: size {self.size}")


def cosine_similarity(a: FeatureVector, b: FeatureVector) -> float:
    """dot(a, b) / (|a|*|b|), clamped into [-1, 1] against roundoff."""
    if len(a.values) != len(b.values):
        raise ValidationError(f"length mismatch: {len(a.values)} vs {len(b.values)}")
    dot = sum(x * y for x, y in zip(a.values, b.values))
    norm_a = math.sqrt(sum(x * x for x in a.values))
    norm_b = math.sqrt(sum(y * y for y in b.values))
    return max(-1.0, min(1.0, dot / (norm_a * norm_b)))


def similarity_filter(
    photos: Iterable[FeatureVector],
    seeds: list[FeatureVector],
    threshold: float,
) -> set[str]:
    """Ids of photos whose best seed similarity reaches the threshold.

    A photo is kept iff max over seeds of cosine similarity >= threshold.
    """
    if not seeds:
        raise ValidationError("similarity filter needs a non-empty seed set")
    kept: set[str] = set()
    for photo in photos:
        best = max(cosine_similarity(photo, seed) for seed in seeds)
        if best >= threshold:
            kept.add(photo.photo_id)
    return kept


def detection_filter(
    objects: Iterable[DetectedObject],
    size_threshold: float,
    conf_threshold: float,
    *,
    labels: frozenset[str] = DEFAULT_BUILDING_LABELS,
) -> bool:
    """True iff one photo's object list shows a qualifying building.

    Both comparisons are strict: size > size_threshold and
    confidence > conf_threshold, with the label in ``labels``.
    """
    for t in (size_threshold, conf_threshold):
        if not 0.0 <= t <= 1.0:
            raise ValidationError(f"threshold {t} outside [0, 1]")
    return any(
        obj.label in labels and obj.size > size_threshold and obj.confidence > conf_threshold
        for obj in objects
    )


def group_objects_by_photo(objects: Iterable[DetectedObject]) -> Mapping[str, list[DetectedObject]]:
    grouped: dict[str, list[DetectedObject]] = {}
    for obj in objects:
        grouped.setdefault(obj.photo_id, []).append(obj)
    return grouped


def read_feature_vectors(path: str | Path) -> list[FeatureVector]:
    """Read JSONL lines of {photo_id, values: [...]}; strict on errors."""
    out: list[FeatureVector] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                fields = json.loads(line)
                out.append(FeatureVector(photo_id=str(fields["photo_id"]), values=fields["values"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValidationError) as e:
                raise ParseError(f"{path}: line {lineno}: {e}")
    return out


def read_detected_objects(path: str | Path) -> list[DetectedObject]:
    """Read JSONL lines of {photo_id, label, confidence, size}."""
    out: list[DetectedObject] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                fields = json.loads(line)
                out.append(
                    DetectedObject(
                        photo_id=str(fields["photo_id"]),
                        label=str(fields["label"]),
                        confidence=float(fields["confidence"]),
                        size=float(fields["size"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as e:
                raise ParseError(f"{path}: line {lineno}: {e}")
    return out
