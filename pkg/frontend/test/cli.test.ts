import fs from "node:fs";
import path from "node:path";
import { beforeAll, describe, expect, it, vi } from "vitest";

import { main } from "../src/cli.js";
import { writeManifestCsv } from "../src/manifest.js";
import { makePngs, readWithPrimary, tempDir } from "./helpers.js";

let csv: string;
let outDir: string;

beforeAll(() => {
  const dir = tempDir("cli-");
  const images = makePngs(dir, 2, 5, 64);
  csv = path.join(dir, "manifest.csv");
  writeManifestCsv(
    csv,
    images.map((p, i) => ({ path: p, label: (i % 2) as 0 | 1, source: "sdv1.4" })),
  );
  outDir = tempDir("cli-out-");
});

describe("cli", () => {
  it("exits 2 on usage problems", async () => {
    vi.spyOn(console, "error").mockImplementation(() => {});
    expect(await main([])).toBe(2);
    expect(await main(["--manifest", csv, "--out", "x.nseb", "--bogus"])).toBe(2);
    expect(await main(["--manifest", csv, "--out", "x.nseb", "--patch-seed", "-3"])).toBe(2);
    expect(await main(["--manifest", csv, "--out", "x.nseb", "--backend", "mystery"])).toBe(2);
    vi.restoreAllMocks();
  });

  it("exits 1 on data problems", async () => {
    vi.spyOn(console, "error").mockImplementation(() => {});
    expect(await main(["--manifest", "/nope.csv", "--out", path.join(outDir, "x.nseb")])).toBe(1);
    vi.restoreAllMocks();
  });

  it("builds a file end to end with the mock backend", async () => {
    const out = path.join(outDir, "built.nseb");
    const logs: string[] = [];
    vi.spyOn(console, "log").mockImplementation((line: string) => {
      logs.push(line);
    });
    expect(await main(["--manifest", csv, "--out", out])).toBe(0);
    vi.restoreAllMocks();
    expect(logs.some((l) => l.includes("2 records"))).toBe(true);
    expect(fs.existsSync(out)).toBe(true);
    expect(readWithPrimary(out).records).toHaveLength(2);
  });
});
