"""Mock text-recognition engine for running the pipeline without models.

Speaks the same invocation contract as a real engine
(``--images <list> --out <file>``) and emits the standard detection
JSONL schema.  Detections come from a sidecar ``<image>.truth.json``
next to each listed image: a JSON array of {text, text_score, box,
box_score}.  Images without a sidecar yield no detections.  The photo id
is the image file's stem.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import MissingInputError, ParseError
from .strpost import StrDetection, write_detections


def run_mock_engine(images_list: str | Path, out_path: str | Path) -> int:
    """Emit detections for every listed image; returns the line count."""
    list_path = Path(images_list)
    if not list_path.exists():
        raise MissingInputError(f"image list {list_path} does not exist")
    detections: list[StrDetection] = []
    for raw in list_path.read_text("utf-8").splitlines():
        image = raw.strip()
        if not image:
            continue
        sidecar = Path(image + ".truth.json")
        if not sidecar.exists():
            continue
        try:
            entries = json.loads(sidecar.read_text("utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(f"{sidecar}: invalid JSON at line {e.lineno} column {e.colno}")
        photo_id = Path(image).stem
        for entry in entries:
            detections.append(
                StrDetection(
                    photo_id=photo_id,
                    text=str(entry["text"]),
                    text_score=float(entry["text_score"]),
                    box=tuple((float(x), float(y)) for x, y in entry["box"]),
                    box_score=float(entry["box_score"]),
                )
            )
    # Atomic write so a crash never leaves a half-written artifact.
    tmp = Path(str(out_path) + ".tmp")
    write_detections(detections, tmp)
    os.replace(tmp, out_path)
    return len(detections)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ftmap-mock-engine",
        description="Emit detection JSONL from planted sidecar files instead of a model.",
    )
    parser.add_argument("--images", required=True, help="text file listing one image path per line")
    parser.add_argument("--out", required=True, help="output detection JSONL path")
    args = parser.parse_args(argv)
    try:
        count = run_mock_engine(args.images, args.out)
    except MissingInputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    print(f"wrote {count} detections to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
