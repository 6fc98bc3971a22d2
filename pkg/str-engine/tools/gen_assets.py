#!/usr/bin/env python3
"""Regenerate the engine's test fixtures and glyph-template weights.

Renders uppercase/digit glyphs of a fixed font into a 16x16 binary atlas
(the recognizer's weights) and draws the five fixture images with the
same font, so template matching has a consistent domain.  Both outputs
are checked in; rerun only when changing the font or charset.

Usage: python tools/gen_assets.py   (from the str-engine directory)
"""

from __future__ import annotations

import json
from pathlib import Path

from matplotlib import font_manager
from PIL import Image, ImageDraw, ImageFont

CHARSET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
ATLAS_SIZE = 16
FONT_SIZE = 64
DARK = 20
LIGHT = 235
BLANK_GRAY = 160

ROOT = Path(__file__).resolve().parent.parent


def load_font(size: int) -> ImageFont.FreeTypeFont:
    path = font_manager.findfont("DejaVu Sans")
    return ImageFont.truetype(path, size)


def glyph_bitmap(char: str, font: ImageFont.FreeTypeFont) -> list[int]:
    canvas = Image.new("L", (FONT_SIZE * 2, FONT_SIZE * 2), LIGHT)
    draw = ImageDraw.Draw(canvas)
    draw.text((FONT_SIZE // 2, FONT_SIZE // 2), char, fill=DARK, font=font)
    mask = canvas.point(lambda v: 255 if v < 110 else 0)
    bbox = mask.getbbox()
    assert bbox is not None, f"glyph {char!r} rendered empty"
    cropped = mask.crop(bbox).resize((ATLAS_SIZE, ATLAS_SIZE), Image.NEAREST)
    return [1 if v else 0 for v in cropped.getdata()]


def draw_word(draw: ImageDraw.ImageDraw, word: str, x: int, y: int,
              font: ImageFont.FreeTypeFont, gap: int = 6) -> None:
    # Per-character placement keeps components disconnected for the
    # engine's blob detector.
    for char in word:
        draw.text((x, y), char, fill=DARK, font=font)
        width = draw.textlength(char, font=font)
        x += int(width) + gap


def make_fixtures(out_dir: Path) -> None:
    font_big = load_font(56)
    font_small = load_font(40)

    storefront = Image.new("L", (640, 360), LIGHT)
    d = ImageDraw.Draw(storefront)
    draw_word(d, "BACKEREI", 60, 80, font_big)
    draw_word(d, "1907", 250, 220, font_small)
    storefront.save(out_dir / "storefront.png")

    blank = Image.new("L", (320, 240), BLANK_GRAY)
    blank.save(out_dir / "blank.png")

    number = Image.new("L", (320, 240), LIGHT)
    d = ImageDraw.Draw(number)
    draw_word(d, "12A", 100, 90, font_big)
    number.save(out_dir / "number.png")

    hotel = Image.new("L", (480, 240), LIGHT)
    d = ImageDraw.Draw(hotel)
    draw_word(d, "HOTEL", 90, 90, font_big)
    hotel.save(out_dir / "hotel.png")

    # Window-grid pattern: repetitive dark blobs, no real text.
    windows = Image.new("L", (480, 320), LIGHT)
    d = ImageDraw.Draw(windows)
    for row in range(4):
        for col in range(6):
            x0, y0 = 30 + col * 72, 24 + row * 72
            d.rectangle([x0, y0, x0 + 40, y0 + 52], fill=DARK)
    windows.save(out_dir / "windows.png")


def main() -> None:
    font = load_font(FONT_SIZE)
    atlas = {char: glyph_bitmap(char, font) for char in CHARSET}
    weights = {
        "name": "glyph-template-atlas",
        "version": "1.0.0",
        "font": "DejaVu Sans",
        "tile": ATLAS_SIZE,
        "glyphs": atlas,
    }
    weights_dir = ROOT / "weights"
    weights_dir.mkdir(exist_ok=True)
    (weights_dir / "glyphs.json").write_text(json.dumps(weights) + "\n", "utf-8")

    fixtures = ROOT / "fixtures"
    fixtures.mkdir(exist_ok=True)
    make_fixtures(fixtures)
    print(f"wrote {len(atlas)} glyphs and 5 fixtures under {ROOT}")


if __name__ == "__main__":
    main()
