import { readFileSync } from "node:fs";

import type { Blob, BlobField } from "./detect.js";
import { MissingWeightsError } from "./errors.js";

export interface GlyphAtlas {
  name: string;
  version: string;
  font: string;
  tile: number;
  glyphs: Record<string, number[]>;
}

export function loadAtlas(path: string): GlyphAtlas {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (e) {
    throw new MissingWeightsError(`weights not found at ${path}: ${(e as Error).message}`);
  }
  let atlas: GlyphAtlas;
  try {
    atlas = JSON.parse(text) as GlyphAtlas;
  } catch (e) {
    throw new MissingWeightsError(`weights at ${path} are not valid JSON: ${(e as Error).message}`);
  }
  if (!atlas.glyphs || !atlas.tile || Object.keys(atlas.glyphs).length === 0) {
    throw new MissingWeightsError(`weights at ${path} lack a glyph table`);
  }
  const size = atlas.tile * atlas.tile;
  for (const [char, bits] of Object.entries(atlas.glyphs)) {
    if (bits.length !== size) {
      throw new MissingWeightsError(`weights glyph ${char} has ${bits.length} bits, expected ${size}`);
    }
  }
  return atlas;
}

/**
 * Nearest-neighbor resample of one blob's own pixels to a tile bitmap,
 * matching how the atlas glyphs were rendered (crop to bbox, scale).
 */
export function blobBitmap(field: BlobField, width: number, blob: Blob, tile: number): Uint8Array {
  const out = new Uint8Array(tile * tile);
  const bw = blob.x1 - blob.x0 + 1;
  const bh = blob.y1 - blob.y0 + 1;
  for (let ty = 0; ty < tile; ty++) {
    const sy = blob.y0 + Math.min(bh - 1, Math.floor(((ty + 0.5) * bh) / tile));
    for (let tx = 0; tx < tile; tx++) {
      const sx = blob.x0 + Math.min(bw - 1, Math.floor(((tx + 0.5) * bw) / tile));
      out[ty * tile + tx] = field.labels[sy * width + sx] === blob.id ? 1 : 0;
    }
  }
  return out;
}

export interface GlyphMatch {
  char: string;
  score: number;
}

/** Best glyph by fraction of agreeing tile pixels; ties keep the first. */
export function matchGlyph(bitmap: Uint8Array, atlas: GlyphAtlas): GlyphMatch {
  const size = atlas.tile * atlas.tile;
  let best: GlyphMatch = { char: "?", score: 0 };
  for (const [char, bits] of Object.entries(atlas.glyphs)) {
    let agree = 0;
    for (let i = 0; i < size; i++) {
      if ((bitmap[i] === 1) === (bits[i] === 1)) {
        agree++;
      }
    }
    const score = agree / size;
    if (score > best.score) {
      best = { char, score };
    }
  }
  return best;
}
