import { SchemaError } from "./errors.js";

/** One recognized text instance in the pipeline's detection schema. */
export interface DetectionRecord {
  photo_id: string;
  text: string;
  text_score: number;
  box: Array<[number, number]>;
  box_score: number;
}

export function validateDetection(rec: DetectionRecord): void {
  if (!rec.photo_id) {
    throw new SchemaError("detection without photo_id");
  }
  if (!rec.text) {
    throw new SchemaError(`detection on ${rec.photo_id}: empty text`);
  }
  for (const [name, score] of [
    ["text_score", rec.text_score],
    ["box_score", rec.box_score],
  ] as Array<[string, number]>) {
    if (!Number.isFinite(score) || score < 0 || score > 1) {
      throw new SchemaError(`detection on ${rec.photo_id}: ${name} ${score} outside [0, 1]`);
    }
  }
  if (rec.box.length < 3) {
    throw new SchemaError(`detection on ${rec.photo_id}: box needs >= 3 points`);
  }
  for (const [x, y] of rec.box) {
    if (!Number.isFinite(x) || !Number.isFinite(y)) {
      throw new SchemaError(`detection on ${rec.photo_id}: non-finite box coordinate`);
    }
  }
}

/** Serialize with a fixed key order so output bytes are reproducible. */
export function detectionToJsonl(rec: DetectionRecord): string {
  return JSON.stringify({
    photo_id: rec.photo_id,
    text: rec.text,
    text_score: rec.text_score,
    box: rec.box,
    box_score: rec.box_score,
  });
}
