import type { GrayImage } from "./png.js";

/** Pixels darker than this count as ink. */
export const DARK_THRESHOLD = 110;

const MIN_BLOB_AREA = 12;
const MIN_BLOB_HEIGHT = 5;

export interface Blob {
  id: number;
  x0: number;
  y0: number;
  x1: number; // inclusive
  y1: number;
  area: number;
}

export interface BlobField {
  labels: Int32Array; // -1 where light, blob id where dark
  blobs: Blob[];
}

/** One grouped text line: adjacent blobs sharing a baseline band. */
export interface TextLine {
  blobs: Blob[];
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

/**
 * Label dark 4-connected components in deterministic row-major order.
 * Tiny specks and degenerate slivers are discarded.
 */
export function findBlobs(img: GrayImage): BlobField {
  const { width, height, data } = img;
  const labels = new Int32Array(width * height).fill(-1);
  const blobs: Blob[] = [];
  const stack: number[] = [];
  for (let start = 0; start < width * height; start++) {
    if (labels[start] !== -1 || data[start] >= DARK_THRESHOLD) {
      continue;
    }
    const id = blobs.length;
    let x0 = width, y0 = height, x1 = 0, y1 = 0, area = 0;
    labels[start] = id;
    stack.push(start);
    while (stack.length > 0) {
      const index = stack.pop()!;
      const x = index % width;
      const y = (index - x) / width;
      area++;
      if (x < x0) x0 = x;
      if (x > x1) x1 = x;
      if (y < y0) y0 = y;
      if (y > y1) y1 = y;
      const neighbors = [index - 1, index + 1, index - width, index + width];
      const valid = [x > 0, x < width - 1, y > 0, y < height - 1];
      for (let n = 0; n < 4; n++) {
        const j = neighbors[n];
        if (valid[n] && labels[j] === -1 && data[j] < DARK_THRESHOLD) {
          labels[j] = id;
          stack.push(j);
        }
      }
    }
    blobs.push({ id, x0, y0, x1, y1, area });
  }
  const kept = blobs.filter(
    (b) =>
      b.area >= MIN_BLOB_AREA &&
      b.y1 - b.y0 + 1 >= MIN_BLOB_HEIGHT &&
      b.y1 - b.y0 + 1 <= height / 2,
  );
  return { labels, blobs: kept };
}

function verticalOverlap(a: Blob, line: TextLine): number {
  const top = Math.max(a.y0, line.y0);
  const bottom = Math.min(a.y1, line.y1);
  return bottom - top + 1;
}

/**
 * Greedy left-to-right grouping: a blob joins a line when it overlaps
 * the line's vertical band and sits within a character gap of its right
 * edge.  Word-sized gaps start a new line, so each word becomes its own
 * detection.
 */
export function groupLines(blobs: Blob[]): TextLine[] {
  const ordered = [...blobs].sort((a, b) => a.x0 - b.x0 || a.y0 - b.y0 || a.id - b.id);
  const lines: TextLine[] = [];
  for (const blob of ordered) {
    const height = blob.y1 - blob.y0 + 1;
    let joined = false;
    for (const line of lines) {
      const lineHeight = line.y1 - line.y0 + 1;
      const overlap = verticalOverlap(blob, line);
      const gap = blob.x0 - line.x1 - 1;
      if (overlap >= 0.5 * Math.min(height, lineHeight) && gap >= -2 && gap <= 0.7 * lineHeight) {
        line.blobs.push(blob);
        line.x0 = Math.min(line.x0, blob.x0);
        line.y0 = Math.min(line.y0, blob.y0);
        line.x1 = Math.max(line.x1, blob.x1);
        line.y1 = Math.max(line.y1, blob.y1);
        joined = true;
        break;
      }
    }
    if (!joined) {
      lines.push({ blobs: [blob], x0: blob.x0, y0: blob.y0, x1: blob.x1, y1: blob.y1 });
    }
  }
  return lines.sort((a, b) => a.y0 - b.y0 || a.x0 - b.x0);
}

function clamp01(v: number): number {
  return Math.max(0, Math.min(1, v));
}

/**
 * Detection confidence from layout regularity: uniform component
 * heights and a plausible ink fill for text.
 */
export function lineBoxScore(line: TextLine): number {
  const heights = line.blobs.map((b) => b.y1 - b.y0 + 1);
  const maxH = Math.max(...heights);
  const minH = Math.min(...heights);
  const uniformity = maxH > 0 ? minH / maxH : 0;
  const ink = line.blobs.reduce((acc, b) => acc + b.area, 0);
  const boxArea = (line.x1 - line.x0 + 1) * (line.y1 - line.y0 + 1);
  const fill = ink / boxArea;
  const fillScore = clamp01(1 - Math.abs(0.35 - fill) / 0.35);
  return clamp01(0.25 + 0.5 * uniformity + 0.25 * fillScore);
}
