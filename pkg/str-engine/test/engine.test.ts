import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { spawnSync } from "node:child_process";

import { describe, expect, it } from "vitest";

import { defaultManifest, runEngine } from "../src/engine.js";
import { MissingWeightsError, UnreadableImageError } from "../src/errors.js";
import { DetectionRecord, validateDetection } from "../src/schema.js";

const ROOT = resolve(__dirname, "..");
const WEIGHTS = join(ROOT, "weights", "glyphs.json");
const FIXTURES = ["storefront", "blank", "number", "hotel", "windows"];

function workDir(): string {
  return mkdtempSync(join(tmpdir(), "str-engine-"));
}

function writeImageList(dir: string, names: string[] = FIXTURES): string {
  const list = join(dir, "images.txt");
  writeFileSync(list, names.map((n) => join(ROOT, "fixtures", `${n}.png`)).join("\n") + "\n");
  return list;
}

function runOnFixtures(dir: string) {
  const out = join(dir, "detections.jsonl");
  const manifest = defaultManifest(writeImageList(dir), out, WEIGHTS);
  const result = runEngine(manifest);
  const lines = readFileSync(out, "utf-8")
    .split("\n")
    .filter((l) => l.length > 0);
  return { out, result, lines, records: lines.map((l) => JSON.parse(l) as DetectionRecord) };
}

describe("engine on the five-image sample", () => {
  it("emits schema-valid JSONL for every detection", () => {
    const { records } = runOnFixtures(workDir());
    expect(records.length).toBeGreaterThan(0);
    for (const rec of records) {
      validateDetection(rec); // throws on violation
      expect(Object.keys(rec)).toEqual(["photo_id", "text", "text_score", "box", "box_score"]);
      expect(rec.text_score).toBeGreaterThanOrEqual(0);
      expect(rec.text_score).toBeLessThanOrEqual(1);
      expect(rec.box_score).toBeGreaterThanOrEqual(0);
      expect(rec.box_score).toBeLessThanOrEqual(1);
      expect(rec.box.length).toBeGreaterThanOrEqual(3);
    }
  });

  it("finds text on the storefront and nothing on the blank image", () => {
    const { result } = runOnFixtures(workDir());
    expect(result.perImage.get("storefront")).toBeGreaterThanOrEqual(1);
    expect(result.perImage.get("blank")).toBe(0);
  });

  it("reads the rendered fixture texts", () => {
    const { records } = runOnFixtures(workDir());
    const texts = records.map((r) => r.text);
    expect(texts).toContain("BACKEREI");
    expect(texts).toContain("1907");
    expect(texts).toContain("HOTEL");
    expect(texts).toContain("12A");
  });

  it("misreads the window grid as letter runs, as real facades do", () => {
    const { records } = runOnFixtures(workDir());
    const windowTexts = records.filter((r) => r.photo_id === "windows");
    expect(windowTexts.length).toBeGreaterThan(0);
    for (const rec of windowTexts) {
      expect(rec.text).toMatch(/^(.)\1*$/); // identical-character run
    }
  });

  it("is deterministic across runs", () => {
    const a = runOnFixtures(workDir());
    const b = runOnFixtures(workDir());
    expect(readFileSync(a.out, "utf-8")).toBe(readFileSync(b.out, "utf-8"));
  });

  it("orders detections by image, then reading order", () => {
    const { records } = runOnFixtures(workDir());
    const storefront = records.filter((r) => r.photo_id === "storefront");
    const ys = storefront.map((r) => r.box[0][1]);
    expect([...ys].sort((p, q) => p - q)).toEqual(ys);
  });
});

describe("engine error cases", () => {
  it("reports missing weights distinctly", () => {
    const dir = workDir();
    const manifest = defaultManifest(
      writeImageList(dir),
      join(dir, "out.jsonl"),
      join(dir, "no-weights.json"),
    );
    expect(() => runEngine(manifest)).toThrow(MissingWeightsError);
  });

  it("reports unreadable images distinctly", () => {
    const dir = workDir();
    const corrupt = join(dir, "corrupt.png");
    writeFileSync(corrupt, "this is not a png");
    const list = join(dir, "images.txt");
    writeFileSync(list, corrupt + "\n");
    const manifest = defaultManifest(list, join(dir, "out.jsonl"), WEIGHTS);
    expect(() => runEngine(manifest)).toThrow(UnreadableImageError);
  });
});

describe("integration with the downstream text filters", () => {
  it("output passes the pipeline's filter stage unchanged", () => {
    const dir = workDir();
    const { out } = runOnFixtures(dir);
    const kept = join(dir, "kept.jsonl");
    const proc = spawnSync(
      "python3",
      ["-m", "ftmap", "filter-str", "--dets", out, "--out", kept],
      {
        encoding: "utf-8",
        env: { ...process.env, PYTHONPATH: resolve(ROOT, "..", "src") },
      },
    );
    expect(proc.status, proc.stderr).toBe(0);
    const keptTexts = readFileSync(kept, "utf-8")
      .split("\n")
      .filter((l) => l.length > 0)
      .map((l) => (JSON.parse(l) as DetectionRecord).text);
    // Real texts survive; the window-grid letter runs are filtered out.
    expect(keptTexts).toContain("BACKEREI");
    expect(keptTexts).toContain("1907");
    for (const text of keptTexts) {
      expect(text).not.toMatch(/^II+$/);
    }
  });
});
