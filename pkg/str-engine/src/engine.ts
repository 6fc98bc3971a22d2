import { readFileSync, renameSync, writeFileSync } from "node:fs";
import { basename, extname } from "node:path";

import { findBlobs, groupLines, lineBoxScore } from "./detect.js";
import { MissingWeightsError } from "./errors.js";
import { readGrayPng } from "./png.js";
import { blobBitmap, loadAtlas } from "./recognize.js";
import { matchGlyph } from "./recognize.js";
import { DetectionRecord, detectionToJsonl, validateDetection } from "./schema.js";

export const SCHEMA_VERSION = 1;
export const DETECTOR = { name: "blob-line", version: "1.0.0" };
export const RECOGNIZER = { name: "glyph-match", version: "1.0.0" };

export interface EngineManifest {
  detector: { name: string; version: string };
  recognizer: { name: string; version: string };
  schema_version: number;
  images: string; // path to a text file listing one image per line
  out: string; // detection JSONL output path
  weights: string; // glyph atlas path
}

export function defaultManifest(images: string, out: string, weights: string): EngineManifest {
  return {
    detector: DETECTOR,
    recognizer: RECOGNIZER,
    schema_version: SCHEMA_VERSION,
    images,
    out,
    weights,
  };
}

export interface EngineResult {
  written: number;
  perImage: Map<string, number>;
}

function photoId(imagePath: string): string {
  return basename(imagePath, extname(imagePath));
}

export function detectImage(
  imagePath: string,
  atlas: ReturnType<typeof loadAtlas>,
): DetectionRecord[] {
  const img = readGrayPng(imagePath);
  const field = findBlobs(img);
  const lines = groupLines(field.blobs);
  const id = photoId(imagePath);
  const records: DetectionRecord[] = [];
  for (const line of lines) {
    const ordered = [...line.blobs].sort((a, b) => a.x0 - b.x0 || a.id - b.id);
    let text = "";
    let scoreSum = 0;
    for (const blob of ordered) {
      const match = matchGlyph(blobBitmap(field, img.width, blob, atlas.tile), atlas);
      text += match.char;
      scoreSum += match.score;
    }
    if (text.length === 0) {
      continue;
    }
    const record: DetectionRecord = {
      photo_id: id,
      text,
      text_score: scoreSum / ordered.length,
      box: [
        [line.x0, line.y0],
        [line.x1 + 1, line.y0],
        [line.x1 + 1, line.y1 + 1],
        [line.x0, line.y1 + 1],
      ],
      box_score: lineBoxScore(line),
    };
    validateDetection(record);
    records.push(record);
  }
  return records;
}

/** Run the whole manifest; the output file is written atomically. */
export function runEngine(manifest: EngineManifest): EngineResult {
  if (manifest.schema_version !== SCHEMA_VERSION) {
    throw new MissingWeightsError(
      `manifest pins schema_version ${manifest.schema_version}, engine speaks ${SCHEMA_VERSION}`,
    );
  }
  const atlas = loadAtlas(manifest.weights);
  const imagePaths = readFileSync(manifest.images, "utf-8")
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
  const perImage = new Map<string, number>();
  const out: string[] = [];
  for (const imagePath of imagePaths) {
    const records = detectImage(imagePath, atlas);
    perImage.set(photoId(imagePath), records.length);
    for (const record of records) {
      out.push(detectionToJsonl(record));
    }
  }
  const body = out.length > 0 ? out.join("\n") + "\n" : "";
  const tmp = manifest.out + ".tmp";
  writeFileSync(tmp, body, "utf-8");
  renameSync(tmp, manifest.out);
  return { written: out.length, perImage };
}
