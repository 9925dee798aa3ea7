import crypto from "node:crypto";
import fs from "node:fs";

export const EMBED_DIM = 768;

// Environment problems (missing runtime, missing weights) are separated from
// input problems so the CLI can exit differently and a batch run can tell
// "this entry is bad" from "nothing will work".
export class EnvironmentError extends Error {}

export interface EncoderBackend {
  readonly id: string;
  readonly dim: number;
  caption(imagePath: string): Promise<string>;
  embedImage(imagePath: string): Promise<Float32Array>;
  embedText(text: string): Promise<Float32Array>;
}

export async function embedPair(
  backend: EncoderBackend,
  imagePath: string,
  text: string,
): Promise<{ visual: Float32Array; text: Float32Array }> {
  return {
    visual: await backend.embedImage(imagePath),
    text: await backend.embedText(text),
  };
}

function expand(seed: string, dim: number): Float32Array {
  const out = new Float32Array(dim);
  let filled = 0;
  for (let block = 0; filled < dim; block++) {
    const digest = crypto.createHash("sha256").update(`${seed}:${block}`).digest();
    for (let i = 0; i < digest.length - 3 && filled < dim; i += 4) {
      out[filled++] = (digest.readUInt32LE(i) / 0xffffffff) * 2 - 1;
    }
  }
  return out;
}

function normalize(vec: Float32Array): Float32Array {
  let sum = 0;
  for (const v of vec) sum += v * v;
  const norm = Math.sqrt(sum) || 1;
  return vec.map((v) => v / norm) as Float32Array;
}

const CAPTION_PATTERN = /^mock scene ([0-9a-f]{16})$/;

/**
 * Deterministic stand-in encoder. Vectors are pseudo-random expansions of a
 * digest of the image bytes, and the text embedding of an image's own caption
 * is built around that image's vector, so matched pairs correlate and
 * mismatched pairs do not. No model weights are needed, which keeps the
 * extraction pipeline and its conformance tests runnable anywhere.
 */
export class MockBackend implements EncoderBackend {
  readonly id = "mock-sha256-768";
  readonly dim = EMBED_DIM;

  private imageDigest(imagePath: string): string {
    let bytes: Buffer;
    try {
      bytes = fs.readFileSync(imagePath);
    } catch (err) {
      throw new Error(`cannot read image ${imagePath}: ${(err as Error).message}`);
    }
    return crypto.createHash("sha256").update(bytes).digest("hex").slice(0, 16);
  }

  async caption(imagePath: string): Promise<string> {
    return `mock scene ${this.imageDigest(imagePath)}`;
  }

  async embedImage(imagePath: string): Promise<Float32Array> {
    return normalize(expand(`img:${this.imageDigest(imagePath)}`, this.dim));
  }

  async embedText(text: string): Promise<Float32Array> {
    const noise = expand(`text:${text}`, this.dim);
    const match = CAPTION_PATTERN.exec(text);
    if (!match) return normalize(noise);
    const base = expand(`img:${match[1]}`, this.dim);
    const mixed = new Float32Array(this.dim);
    for (let i = 0; i < this.dim; i++) mixed[i] = base[i] + 0.75 * noise[i];
    return normalize(mixed);
  }
}

const RUNTIME_MODULE = "@xenova/transformers";

/**
 * Real encoder backend: CLIP ViT-L/14 towers for the 768-dim embeddings and
 * a captioning pipeline, all via the transformers.js runtime. The runtime
 * and its weights are not vendored; constructing works offline but the
 * first call fails with an EnvironmentError when they are unavailable.
 */
export class TransformersBackend implements EncoderBackend {
  readonly dim = EMBED_DIM;
  readonly id: string;
  private readonly clipModel: string;
  private readonly captionModel: string;
  private runtime: any;

  constructor(
    clipModel = "Xenova/clip-vit-large-patch14",
    captionModel = "Xenova/vit-gpt2-image-captioning",
  ) {
    this.clipModel = clipModel;
    this.captionModel = captionModel;
    this.id = `${clipModel}+${captionModel}`;
  }

  private async load(): Promise<any> {
    if (!this.runtime) {
      try {
        this.runtime = await import(RUNTIME_MODULE);
      } catch (err) {
        throw new EnvironmentError(
          `encoder runtime unavailable: install ${RUNTIME_MODULE} ` +
            `(${(err as Error).message})`,
        );
      }
    }
    return this.runtime;
  }

  async caption(imagePath: string): Promise<string> {
    const t = await this.load();
    const captioner = await t.pipeline("image-to-text", this.captionModel);
    // greedy decoding so repeated runs give the same caption
    const result = await captioner(imagePath, { max_new_tokens: 40, do_sample: false });
    const text: string = result?.[0]?.generated_text ?? "";
    if (!text) throw new Error(`captioner returned empty text for ${imagePath}`);
    return text;
  }

  async embedImage(imagePath: string): Promise<Float32Array> {
    const t = await this.load();
    const processor = await t.AutoProcessor.from_pretrained(this.clipModel);
    const model = await t.CLIPVisionModelWithProjection.from_pretrained(this.clipModel);
    const image = await t.RawImage.read(imagePath);
    const inputs = await processor(image);
    const { image_embeds } = await model(inputs);
    return Float32Array.from(image_embeds.data);
  }

  async embedText(text: string): Promise<Float32Array> {
    const t = await this.load();
    const tokenizer = await t.AutoTokenizer.from_pretrained(this.clipModel);
    const model = await t.CLIPTextModelWithProjection.from_pretrained(this.clipModel);
    const inputs = tokenizer([text], { padding: true, truncation: true });
    const { text_embeds } = await model(inputs);
    return Float32Array.from(text_embeds.data);
  }
}

export function makeBackend(name: string): EncoderBackend {
  if (name === "mock") return new MockBackend();
  if (name === "transformers") return new TransformersBackend();
  throw new Error(`unknown backend "${name}" (expected mock or transformers)`);
}
