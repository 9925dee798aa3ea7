import fs from "node:fs";
import os from "node:os";
import path from "node:path";

import { EncoderBackend, EnvironmentError } from "./backend.js";
import { ExtractionManifest } from "./manifest.js";
import { EmbeddingRecord, writeNseb } from "./nseb.js";
import { runPatchsel } from "./patchsel.js";

export interface ExtractOptions {
  /** seeded patch-selection preprocessing for the visual encoder input */
  patchSeed?: number;
  /** append "@<encoder id>" to each record's source tag (default true) */
  tagEncoder?: boolean;
  concurrency?: number;
}

export interface SkippedEntry {
  path: string;
  reason: string;
}

export interface ExtractReport {
  written: number;
  skipped: SkippedEntry[];
}

const IMAGE_SUFFIXES = new Set([".png", ".jpg", ".jpeg"]);

interface Job {
  index: number;
  entryPath: string;
  encodePath: string;
  label: 0 | 1;
  source: string;
}

async function runPool<T>(jobs: (() => Promise<T>)[], width: number): Promise<T[]> {
  const results = new Array<T>(jobs.length);
  let next = 0;
  const workers = Array.from({ length: Math.max(1, width) }, async () => {
    while (next < jobs.length) {
      const i = next++;
      results[i] = await jobs[i]();
    }
  });
  await Promise.all(workers);
  return results;
}

/**
 * Encode every manifest entry and write one NSEB file. Entries that fail
 * (unreadable image, captioner hiccup) are skipped and reported; a backend
 * that cannot run at all aborts instead. Captions always describe the
 * original image; with patchSeed set, the visual encoder sees the mosaic.
 */
export async function buildEmbeddingFile(
  manifest: ExtractionManifest,
  backend: EncoderBackend,
  outPath: string,
  opts: ExtractOptions = {},
): Promise<ExtractReport> {
  const tagEncoder = opts.tagEncoder ?? true;
  const skipped: SkippedEntry[] = [];
  const jobs: Job[] = [];

  let stagingDir: string | undefined;
  try {
    if (opts.patchSeed !== undefined) {
      stagingDir = fs.mkdtempSync(path.join(os.tmpdir(), "nseb-extract-"));
      const inputDir = path.join(stagingDir, "in");
      const mosaicDir = path.join(stagingDir, "out");
      fs.mkdirSync(inputDir);
      for (const [i, entry] of manifest.entries.entries()) {
        const ext = path.extname(entry.path).toLowerCase();
        if (!IMAGE_SUFFIXES.has(ext)) {
          skipped.push({ path: entry.path, reason: `unsupported suffix "${ext}"` });
          continue;
        }
        const stem = `e${String(i).padStart(4, "0")}`;
        try {
          fs.copyFileSync(entry.path, path.join(inputDir, stem + ext));
        } catch (err) {
          skipped.push({ path: entry.path, reason: (err as Error).message });
          continue;
        }
        jobs.push({
          index: i,
          entryPath: entry.path,
          encodePath: path.join(mosaicDir, stem + ".png"),
          label: entry.label,
          source: entry.source,
        });
      }
      if (jobs.length > 0) {
        runPatchsel({ input: inputDir, output: mosaicDir, seed: opts.patchSeed });
      }
    } else {
      for (const [i, entry] of manifest.entries.entries()) {
        jobs.push({
          index: i,
          entryPath: entry.path,
          encodePath: entry.path,
          label: entry.label,
          source: entry.source,
        });
      }
    }

    const encoded = await runPool(
      jobs.map((job) => async (): Promise<EmbeddingRecord | SkippedEntry> => {
        try {
          const visual = await backend.embedImage(job.encodePath);
          let text: Float32Array | undefined;
          if (manifest.captions) {
            const description = await backend.caption(job.entryPath);
            text = await backend.embedText(description);
          }
          return {
            id: `${String(job.index).padStart(4, "0")}-${path.basename(job.entryPath)}`,
            label: job.label,
            source: tagEncoder ? `${job.source}@${backend.id}` : job.source,
            visual,
            text,
          };
        } catch (err) {
          if (err instanceof EnvironmentError) throw err;
          return { path: job.entryPath, reason: (err as Error).message };
        }
      }),
      opts.concurrency ?? 4,
    );

    const records: EmbeddingRecord[] = [];
    for (const item of encoded) {
      if ("reason" in item) skipped.push(item as SkippedEntry);
      else records.push(item as EmbeddingRecord);
    }
    if (records.length === 0) {
      throw new Error(
        `no manifest entry could be processed (${skipped.length} skipped)`,
      );
    }
    const written = writeNseb(outPath, backend.dim, records);
    return { written, skipped };
  } finally {
    if (stagingDir) fs.rmSync(stagingDir, { recursive: true, force: true });
  }
}
