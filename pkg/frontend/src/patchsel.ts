import { spawnSync } from "node:child_process";

export interface PatchselOptions {
  input: string;
  output: string;
  seed?: number;
  entropyCsv?: string;
}

/**
 * Run the reference patch-selection CLI over a directory. Shelling out keeps
 * the mosaics byte-identical to what the training pipeline sees instead of
 * trusting a re-implementation to stay in sync.
 */
export function runPatchsel(opts: PatchselOptions): void {
  const args = ["-m", "semnull", "patchsel", "--input", opts.input, "--output", opts.output];
  if (opts.seed !== undefined) args.push("--seed", String(opts.seed));
  if (opts.entropyCsv) args.push("--entropy-csv", opts.entropyCsv);
  const result = spawnSync("python3", args, { encoding: "utf8" });
  if (result.error) {
    throw new Error(`cannot launch python3: ${result.error.message}`);
  }
  if (result.status !== 0) {
    const detail = (result.stderr || result.stdout || "").trim();
    throw new Error(`patchsel failed (exit ${result.status}): ${detail}`);
  }
}
