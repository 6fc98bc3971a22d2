import { readFileSync } from "node:fs";

import { PNG } from "pngjs";

import { UnreadableImageError } from "./errors.js";

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major 8-bit luma. */
  data: Uint8Array;
}

export function readGrayPng(path: string): GrayImage {
  let buffer: Buffer;
  try {
    buffer = readFileSync(path);
  } catch (e) {
    throw new UnreadableImageError(`cannot read image ${path}: ${(e as Error).message}`);
  }
  let png: PNG;
  try {
    png = PNG.sync.read(buffer);
  } catch (e) {
    throw new UnreadableImageError(`cannot decode PNG ${path}: ${(e as Error).message}`);
  }
  const { width, height, data } = png;
  const gray = new Uint8Array(width * height);
  for (let i = 0; i < width * height; i++) {
    const r = data[4 * i];
    const g = data[4 * i + 1];
    const b = data[4 * i + 2];
    gray[i] = Math.round(0.299 * r + 0.587 * g + 0.114 * b);
  }
  return { width, height, data: gray };
}
