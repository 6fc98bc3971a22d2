"""Recognized-text cleanup: score thresholds, stopwords, repetitive letters.

Scene-text output carries a detection (box) score and a recognition
(text) score per string.  Three stages drop low-confidence results,
stopwords misread off signage, and the letter-salad strings that window
grids and balcony railings tend to produce.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ParseError, ValidationError
from .photo import FilterReport

DEFAULT_SCORE_THRESHOLD = 0.8

_BUNDLED_STOPWORDS = {"en": "stopwords_en.txt", "de": "stopwords_de.txt"}
_BUNDLED_ALLOWLIST = "repetition_allowlist.txt"


@dataclass(frozen=True)
class StrDetection:
    """One recognized text instance with its box polygon and scores."""

    photo_id: str
    text: str
    text_score: float
    box: tuple[tuple[float, float], ...]
    box_score: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "box", tuple((float(x), float(y)) for x, y in self.box))
        if not self.text:
            raise ValidationError(f"detection on {self.photo_id}: empty text")
        for name, score in (("text_score", self.text_score), ("box_score", self.box_score)):
            if not 0.0 <= score <= 1.0:
                raise ValidationError(f"detection on {self.photo_id}: {name} {score} outside [0, 1]")
        if len(self.box) < 3:
            raise ValidationError(f"detection on {self.photo_id}: box needs >= 3 points")


@dataclass(frozen=True)
class StopwordLists:
    """Lowercase stopword sets keyed by language."""

    languages: dict[str, frozenset[str]]

    def __post_init__(self) -> None:
        if not self.languages:
            raise ValidationError("stopword lists: no languages")
        for lang, tokens in self.languages.items():
            if not tokens:
                raise ValidationError(f"stopword list {lang!r} is empty")
            if any(t != t.lower() for t in tokens):
                raise ValidationError(f"stopword list {lang!r} has non-lowercase tokens")

    def __contains__(self, token: str) -> bool:
        return any(token in tokens for tokens in self.languages.values())


def _read_token_lines(text: str) -> frozenset[str]:
    tokens = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            tokens.add(line.lower())
    return frozenset(tokens)


def load_token_file(path: str | Path) -> frozenset[str]:
    """One token per line, # comments; tokens are lowercased."""
    return _read_token_lines(Path(path).read_text("utf-8"))


def load_stopword_lists(paths: Mapping[str, str | Path] | None = None) -> StopwordLists:
    """Load stopwords from per-language files; default is the bundled en+de."""
    if paths is None:
        languages = {
            lang: _read_token_lines(resources.files("ftmap.data").joinpath(name).read_text("utf-8"))
            for lang, name in _BUNDLED_STOPWORDS.items()
        }
    else:
        languages = {lang: load_token_file(p) for lang, p in paths.items()}
    return StopwordLists(languages=languages)


def load_bundled_allowlist() -> frozenset[str]:
    return _read_token_lines(
        resources.files("ftmap.data").joinpath(_BUNDLED_ALLOWLIST).read_text("utf-8")
    )


def score_filter(
    dets: Iterable[StrDetection],
    text_threshold: float = DEFAULT_SCORE_THRESHOLD,
    box_threshold: float = DEFAULT_SCORE_THRESHOLD,
) -> list[StrDetection]:
    """Keep detections with both scores strictly above their thresholds."""
    for t in (text_threshold, box_threshold):
        if not 0.0 <= t <= 1.0:
            raise ValidationError(f"score threshold {t} outside [0, 1]")
    return [d for d in dets if d.text_score > text_threshold and d.box_score > box_threshold]


def _strip_surrounding_punct(text: str) -> str:
    start, end = 0, len(text)
    while start < end and not text[start].isalnum():
        start += 1
    while end > start and not text[end - 1].isalnum():
        end -= 1
    return text[start:end]


def stopword_filter(
    dets: Iterable[StrDetection],
    lists: StopwordLists | None = None,
    *,
    case_sensitive: bool = False,
) -> list[StrDetection]:
    """Drop detections whose whole text is a stopword.

    The text is stripped of surrounding punctuation and, unless
    ``case_sensitive``, lowercased before membership lookup.  Matching is
    whole-token only: "Theater" survives even though it contains "the".
    """
    if lists is None:
        lists = load_stopword_lists()
    kept = []
    for d in dets:
        token = _strip_surrounding_punct(d.text)
        if not case_sensitive:
            token = token.lower()
        if token not in lists:
            kept.append(d)
    return kept


def _letters_only(folded: str) -> str:
    return "".join(c for c in folded if c.isalpha())


def _longest_run(token: str) -> int:
    best = run = 0
    prev = None
    for c in token:
        run = run + 1 if c == prev else 1
        prev = c
        best = max(best, run)
    return best


def looks_repetitive(text: str, allowlist: frozenset[str] = frozenset()) -> bool:
    """Heuristic for letter salad misread off repetitive facade patterns.

    The text is case-folded and reduced to letters (punctuation and
    digits dropped).  It is repetitive when the longest identical-letter
    run is >= 3, or when a token of length >= 4 uses at most a third as
    many distinct letters, unless the token is allowlisted.  All-digit
    texts are never repetitive: house numbers like "111" are legitimate.
    """
    folded = text.casefold()
    if folded and all(c.isdigit() for c in folded):
        return False
    token = _letters_only(folded)
    if token in allowlist:
        return False
    if _longest_run(token) >= 3:
        return True
    # distinct/length <= 1/3, in exact integer arithmetic
    return len(token) >= 4 and 3 * len(set(token)) <= len(token)


def repetition_filter(
    dets: Iterable[StrDetection], allowlist: frozenset[str] = frozenset()
) -> list[StrDetection]:
    """Drop detections whose text looks like a repetitive-letter misread."""
    return [d for d in dets if not looks_repetitive(d.text, allowlist)]


@dataclass(frozen=True)
class StrFilterConfig:
    text_threshold: float = DEFAULT_SCORE_THRESHOLD
    box_threshold: float = DEFAULT_SCORE_THRESHOLD
    stopwords: StopwordLists | None = None
    stopword_case_sensitive: bool = False
    allowlist: frozenset[str] = field(default_factory=frozenset)


def filter_pipeline(
    dets: list[StrDetection], config: StrFilterConfig | None = None
) -> tuple[list[StrDetection], list[FilterReport]]:
    """Run score, stopword, and repetition filters in order.

    Returns the surviving detections and one chained report per stage
    (each stage's input count is the previous stage's kept count).
    """
    config = config or StrFilterConfig()
    reports: list[FilterReport] = []

    def report(stage: str, before: list, after: list) -> None:
        reports.append(
            FilterReport(
                stage=stage,
                input_count=len(before),
                kept_count=len(after),
                dropped_count=len(before) - len(after),
            )
        )

    after_score = score_filter(dets, config.text_threshold, config.box_threshold)
    report("score", dets, after_score)
    after_stop = stopword_filter(
        after_score, config.stopwords, case_sensitive=config.stopword_case_sensitive
    )
    report("stopword", after_score, after_stop)
    after_rep = repetition_filter(after_stop, config.allowlist)
    report("repetition", after_stop, after_rep)
    return after_rep, reports


def read_detections(path: str | Path) -> list[StrDetection]:
    """Read detection JSONL: {photo_id, text, text_score, box, box_score}."""
    out: list[StrDetection] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                fields = json.loads(line)
                out.append(
                    StrDetection(
                        photo_id=str(fields["photo_id"]),
                        text=str(fields["text"]),
                        text_score=float(fields["text_score"]),
                        box=tuple((float(x), float(y)) for x, y in fields["box"]),
                        box_score=float(fields["box_score"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as e:
                raise ParseError(f"{path}: line {lineno}: {e}")
    return out


def write_detections(dets: Iterable[StrDetection], path: str | Path) -> None:
    """Canonical detection writer; re-serializing a parsed file is stable."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in dets:
            fields = {
                "photo_id": d.photo_id,
                "text": d.text,
                "text_score": d.text_score,
                "box": [[x, y] for x, y in d.box],
                "box_score": d.box_score,
            }
            fh.write(json.dumps(fields, ensure_ascii=False, separators=(",", ":")) + "\n")
