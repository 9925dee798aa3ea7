import { spawnSync } from "node:child_process";
import fs from "node:fs";
import os from "node:os";
import path from "node:path";

export function tempDir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

function runPython(code: string, args: string[]): string {
  const result = spawnSync("python3", ["-c", code, ...args], { encoding: "utf8" });
  if (result.status !== 0) {
    throw new Error(`python3 helper failed: ${result.stderr}`);
  }
  return result.stdout;
}

/** Write `count` random RGB PNGs named img-<k>.png into dir; returns paths. */
export function makePngs(dir: string, count: number, seed: number, size = 224): string[] {
  runPython(
    `
import sys
import numpy as np
from PIL import Image
out, count, seed, size = sys.argv[1], int(sys.argv[2]), int(sys.argv[3]), int(sys.argv[4])
rng = np.random.default_rng(seed)
for k in range(count):
    img = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
    Image.fromarray(img).save(f"{out}/img-{k}.png")
`,
    [dir, String(count), String(seed), String(size)],
  );
  return Array.from({ length: count }, (_, k) => path.join(dir, `img-${k}.png`));
}

export interface PrimaryRecordView {
  id: string;
  label: number;
  source: string;
  has_text: boolean;
  visual_head: number[];
}

export interface PrimaryView {
  dim: number;
  records: PrimaryRecordView[];
}

/** Parse an NSEB file with the reference Python reader (full validation). */
export function readWithPrimary(nsebPath: string): PrimaryView {
  const stdout = runPython(
    `
import json, sys
from semnull import read_embeddings
with open(sys.argv[1], "rb") as fh:
    eset = read_embeddings(fh)
print(json.dumps({
    "dim": eset.dim,
    "records": [
        {
            "id": r.id,
            "label": r.label,
            "source": r.source,
            "has_text": r.text is not None,
            "visual_head": [float(v) for v in r.visual[:4]],
        }
        for r in eset.records
    ],
}))
`,
    [nsebPath],
  );
  return JSON.parse(stdout);
}

export function runPrimaryPatchsel(input: string, output: string, seed: number): void {
  const result = spawnSync(
    "python3",
    ["-m", "semnull", "patchsel", "--input", input, "--output", output, "--seed", String(seed)],
    { encoding: "utf8" },
  );
  if (result.status !== 0) {
    throw new Error(`reference patchsel failed: ${result.stderr}`);
  }
}

export function cosine(a: Float32Array, b: Float32Array): number {
  let dot = 0;
  let na = 0;
  let nb = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / Math.sqrt(na * nb);
}
