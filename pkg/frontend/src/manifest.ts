import fs from "node:fs";

export interface ManifestEntry {
  path: string;
  label: 0 | 1;
  source: string;
}

export interface ExtractionManifest {
  entries: ManifestEntry[];
  encoderId: string;
  captions: boolean;
}

const HEADER = "path,label,source";

// Same CSV dialect the dataset tooling emits: three columns, no quoting of
// commas inside paths (none of the fixtures need it), blank lines skipped.
export function readManifestCsv(csvPath: string): ManifestEntry[] {
  const text = fs.readFileSync(csvPath, "utf8");
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0 || lines[0] !== HEADER) {
    throw new Error(`manifest header must be "${HEADER}"`);
  }
  const entries: ManifestEntry[] = [];
  for (const [i, line] of lines.slice(1).entries()) {
    const parts = line.split(",");
    if (parts.length !== 3) {
      throw new Error(`manifest row ${i + 2}: expected 3 fields, got ${parts.length}`);
    }
    const [path, labelText, source] = parts;
    if (labelText !== "0" && labelText !== "1") {
      throw new Error(`manifest row ${i + 2}: label must be 0 or 1, got "${labelText}"`);
    }
    if (path.length === 0 || source.length === 0) {
      throw new Error(`manifest row ${i + 2}: empty path or source`);
    }
    entries.push({ path, label: labelText === "1" ? 1 : 0, source });
  }
  return entries;
}

export function writeManifestCsv(csvPath: string, entries: ManifestEntry[]): void {
  const lines = [HEADER, ...entries.map((e) => `${e.path},${e.label},${e.source}`)];
  fs.writeFileSync(csvPath, lines.join("\n") + "\n");
}
