export {
  EMBED_DIM,
  EncoderBackend,
  EnvironmentError,
  MockBackend,
  TransformersBackend,
  embedPair,
  makeBackend,
} from "./backend.js";
export { buildEmbeddingFile } from "./extract.js";
export type { ExtractOptions, ExtractReport, SkippedEntry } from "./extract.js";
export { readManifestCsv, writeManifestCsv } from "./manifest.js";
export type { ExtractionManifest, ManifestEntry } from "./manifest.js";
export { NSEB_VERSION, decodeNseb, encodeNseb, writeNseb } from "./nseb.js";
export type { EmbeddingRecord } from "./nseb.js";
export { runPatchsel } from "./patchsel.js";
export type { PatchselOptions } from "./patchsel.js";
