#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import { fileURLToPath } from "node:url";

import { defaultManifest, runEngine } from "./engine.js";
import { MissingWeightsError, SchemaError, UnreadableImageError } from "./errors.js";

const USAGE = `usage: str-engine --images <list-file> --out <detections.jsonl>
                  [--weights <glyphs.json>] [--manifest <manifest.json>]

Reads one image path per line from the list file, detects and recognizes
text, and writes one detection JSONL line per text instance.  With
--manifest, the engine manifest (models, versions, paths) is recorded
there as JSON.`;

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`bad arguments near ${key}`);
    }
    args.set(key.slice(2), argv[i + 1]);
  }
  return args;
}

export function main(argv: string[]): number {
  if (argv.includes("--help") || argv.includes("-h")) {
    console.log(USAGE);
    return 0;
  }
  let args: Map<string, string>;
  try {
    args = parseArgs(argv);
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    console.error(USAGE);
    return 1;
  }
  const images = args.get("images");
  const out = args.get("out");
  if (!images || !out) {
    console.error("error: --images and --out are required");
    console.error(USAGE);
    return 1;
  }
  const weights =
    args.get("weights") ?? fileURLToPath(new URL("../weights/glyphs.json", import.meta.url));
  const manifest = defaultManifest(images, out, weights);
  try {
    const result = runEngine(manifest);
    if (args.has("manifest")) {
      writeFileSync(args.get("manifest")!, JSON.stringify(manifest, null, 2) + "\n", "utf-8");
    }
    console.log(`wrote ${result.written} detections to ${out}`);
    return 0;
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    if (e instanceof MissingWeightsError) return 2;
    if (e instanceof UnreadableImageError) return 3;
    if (e instanceof SchemaError) return 4;
    return 5;
  }
}

process.exit(main(process.argv.slice(2)));
