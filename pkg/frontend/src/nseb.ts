import fs from "node:fs";
import path from "node:path";

export const NSEB_VERSION = 1;
const MAGIC = Buffer.from("NSEB", "ascii");
const HAS_TEXT = 0x01;

export interface EmbeddingRecord {
  id: string;
  label: 0 | 1;
  source: string;
  visual: Float32Array;
  text?: Float32Array;
}

function checkVector(name: string, vec: Float32Array, dim: number, id: string): void {
  if (vec.length !== dim) {
    throw new Error(`record "${id}": ${name} vector has ${vec.length} entries, expected ${dim}`);
  }
  for (const v of vec) {
    if (!Number.isFinite(v)) {
      throw new Error(`record "${id}": non-finite ${name} entry`);
    }
  }
}

export function encodeNseb(dim: number, records: EmbeddingRecord[]): Buffer {
  const seen = new Set<string>();
  const chunks: Buffer[] = [];
  const header = Buffer.alloc(4 + 2 + 4 + 8);
  MAGIC.copy(header, 0);
  header.writeUInt16LE(NSEB_VERSION, 4);
  header.writeUInt32LE(dim, 6);
  header.writeBigUInt64LE(BigInt(records.length), 10);
  chunks.push(header);

  for (const record of records) {
    if (seen.has(record.id)) {
      throw new Error(`duplicate record id "${record.id}"`);
    }
    seen.add(record.id);
    checkVector("visual", record.visual, dim, record.id);
    if (record.text) checkVector("text", record.text, dim, record.id);

    const id = Buffer.from(record.id, "utf8");
    const source = Buffer.from(record.source, "utf8");
    if (id.length > 0xffff || source.length > 0xffff) {
      throw new Error(`record "${record.id}": id or source too long`);
    }
    const head = Buffer.alloc(2 + id.length + 1 + 2 + source.length + 1);
    let off = 0;
    off = head.writeUInt16LE(id.length, off);
    off += id.copy(head, off);
    off = head.writeUInt8(record.label, off);
    off = head.writeUInt16LE(source.length, off);
    off += source.copy(head, off);
    head.writeUInt8(record.text ? HAS_TEXT : 0, off);
    chunks.push(head);
    chunks.push(Buffer.from(new Float32Array(record.visual).buffer));
    if (record.text) chunks.push(Buffer.from(new Float32Array(record.text).buffer));
  }
  return Buffer.concat(chunks);
}

export function writeNseb(outPath: string, dim: number, records: EmbeddingRecord[]): number {
  const payload = encodeNseb(dim, records);
  const dir = path.dirname(outPath);
  fs.mkdirSync(dir, { recursive: true });
  const tmp = path.join(dir, `.tmp-${process.pid}-${Date.now()}-${path.basename(outPath)}`);
  try {
    fs.writeFileSync(tmp, payload);
    fs.renameSync(tmp, outPath);
  } catch (err) {
    fs.rmSync(tmp, { force: true });
    throw err;
  }
  return records.length;
}

// Reader used by the tests to check what we wrote; the authoritative
// validator is the Python side, which the conformance tests also run.
export function decodeNseb(data: Buffer): { dim: number; records: EmbeddingRecord[] } {
  let off = 0;
  const need = (n: number, what: string) => {
    if (off + n > data.length) throw new Error(`truncated: ${what}`);
    off += n;
    return off - n;
  };
  const magicAt = need(4, "magic");
  if (!data.subarray(magicAt, magicAt + 4).equals(MAGIC)) {
    throw new Error("bad magic");
  }
  const version = data.readUInt16LE(need(2, "version"));
  if (version !== NSEB_VERSION) throw new Error(`unsupported version ${version}`);
  const dim = data.readUInt32LE(need(4, "dim"));
  const count = Number(data.readBigUInt64LE(need(8, "count")));

  const readVector = (what: string) => {
    const at = need(4 * dim, what);
    const out = new Float32Array(dim);
    for (let i = 0; i < dim; i++) out[i] = data.readFloatLE(at + 4 * i);
    return out;
  };

  const records: EmbeddingRecord[] = [];
  for (let i = 0; i < count; i++) {
    const idLen = data.readUInt16LE(need(2, `record ${i} id length`));
    const idAt = need(idLen, `record ${i} id`);
    const id = data.subarray(idAt, idAt + idLen).toString("utf8");
    const label = data.readUInt8(need(1, `record ${i} label`));
    if (label !== 0 && label !== 1) throw new Error(`record ${i}: bad label ${label}`);
    const srcLen = data.readUInt16LE(need(2, `record ${i} source length`));
    const srcAt = need(srcLen, `record ${i} source`);
    const source = data.subarray(srcAt, srcAt + srcLen).toString("utf8");
    const flags = data.readUInt8(need(1, `record ${i} flags`));
    if ((flags & ~HAS_TEXT) !== 0) throw new Error(`record ${i}: unknown flag bits`);
    const visual = readVector(`record ${i} visual`);
    const text = flags & HAS_TEXT ? readVector(`record ${i} text`) : undefined;
    records.push({ id, label: label as 0 | 1, source, visual, text });
  }
  if (off !== data.length) throw new Error("trailing bytes");
  return { dim, records };
}
