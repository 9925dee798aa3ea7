#!/usr/bin/env node
import { parseArgs } from "node:util";

import { EnvironmentError, makeBackend } from "./backend.js";
import { buildEmbeddingFile } from "./extract.js";
import { readManifestCsv } from "./manifest.js";

const USAGE = `usage: nseb-extract --manifest <csv> --out <nseb> [options]

Encode the images listed in a manifest (path,label,source) into an NSEB
embedding file.

options:
  --backend <name>     mock | transformers (default mock)
  --no-captions        skip captioning; records carry visual vectors only
  --patch-seed <n>     preprocess images with seeded patch selection
  --plain-sources      do not append the encoder id to source tags
  --concurrency <n>    parallel encodes (default 4)
`;

export async function main(argv: string[]): Promise<number> {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        manifest: { type: "string" },
        out: { type: "string" },
        backend: { type: "string", default: "mock" },
        "no-captions": { type: "boolean", default: false },
        "patch-seed": { type: "string" },
        "plain-sources": { type: "boolean", default: false },
        concurrency: { type: "string", default: "4" },
        help: { type: "boolean", default: false },
      },
      allowPositionals: false,
    }));
  } catch (err) {
    console.error((err as Error).message);
    console.error(USAGE);
    return 2;
  }
  if (values.help) {
    console.log(USAGE);
    return 0;
  }
  if (!values.manifest || !values.out) {
    console.error("--manifest and --out are required");
    console.error(USAGE);
    return 2;
  }
  let patchSeed: number | undefined;
  if (values["patch-seed"] !== undefined) {
    patchSeed = Number(values["patch-seed"]);
    if (!Number.isInteger(patchSeed) || patchSeed < 0) {
      console.error(`--patch-seed must be a nonnegative integer, got "${values["patch-seed"]}"`);
      return 2;
    }
  }
  const concurrency = Number(values.concurrency);
  if (!Number.isInteger(concurrency) || concurrency < 1) {
    console.error(`--concurrency must be a positive integer, got "${values.concurrency}"`);
    return 2;
  }

  let backend;
  try {
    backend = makeBackend(values.backend as string);
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }

  try {
    const manifest = {
      entries: readManifestCsv(values.manifest as string),
      encoderId: backend.id,
      captions: !values["no-captions"],
    };
    const report = await buildEmbeddingFile(manifest, backend, values.out as string, {
      patchSeed,
      tagEncoder: !values["plain-sources"],
      concurrency,
    });
    for (const skip of report.skipped) {
      console.error(`skipped ${skip.path}: ${skip.reason}`);
    }
    console.log(
      `extract: ${report.written} records (${report.skipped.length} skipped) -> ${values.out}`,
    );
    return 0;
  } catch (err) {
    if (err instanceof EnvironmentError) {
      console.error(`environment error: ${err.message}`);
    } else {
      console.error((err as Error).message);
    }
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
