// Frozen deterministic text encoder: a fixed token-embedding table derived
// from SHA-256, mean-pooled over the tokens of each input. No weights are
// downloaded and nothing is trainable, so identical text always yields an
// identical vector within and across processes.

import { createHash } from "node:crypto";

export interface Encoder {
  readonly model: string;
  readonly dimension: number;
  encode(texts: string[]): number[][];
}

const TOKEN_RE = /[a-z0-9]+/g;

function tokenize(text: string): string[] {
  const tokens = text.toLowerCase().match(TOKEN_RE);
  if (tokens && tokens.length > 0) return tokens;
  // Token-free but non-empty text still embeds; only "" pools to zero.
  return text.length > 0 ? [text] : [];
}

/** Expand sha256(model:token:block) into `dimension` floats in [-1, 1). */
function tokenVector(model: string, token: string, dimension: number): Float64Array {
  const out = new Float64Array(dimension);
  let filled = 0;
  for (let block = 0; filled < dimension; block++) {
    const digest = createHash("sha256")
      .update(`${model}:${token}:${block}`)
      .digest();
    for (let i = 0; i + 4 <= digest.length && filled < dimension; i += 4) {
      const word = digest.readUInt32BE(i);
      out[filled++] = word / 2 ** 31 - 1.0;
    }
  }
  return out;
}

export class TokenHashEncoder implements Encoder {
  readonly model: string;
  readonly dimension: number;
  private table = new Map<string, Float64Array>();

  constructor(model: string, dimension: number) {
    if (dimension < 1) throw new Error(`dimension must be >= 1, got ${dimension}`);
    this.model = model;
    this.dimension = dimension;
  }

  private lookup(token: string): Float64Array {
    let vec = this.table.get(token);
    if (!vec) {
      vec = tokenVector(this.model, token, this.dimension);
      this.table.set(token, vec);
    }
    return vec;
  }

  encodeText(text: string): number[] {
    const tokens = tokenize(text);
    const pooled = new Float64Array(this.dimension);
    for (const token of tokens) {
      const vec = this.lookup(token);
      for (let i = 0; i < this.dimension; i++) pooled[i] += vec[i];
    }
    if (tokens.length > 0) {
      for (let i = 0; i < this.dimension; i++) pooled[i] /= tokens.length;
    }
    return Array.from(pooled);
  }

  encode(texts: string[]): number[][] {
    return texts.map((t) => this.encodeText(t));
  }
}

export const DEFAULT_MODEL = "token-hash-768";
export const DEFAULT_DIMENSION = 768;

/**
 * Only the bundled frozen encoder is available offline; a deployment that
 * wants a transformer backend swaps this factory, keeping the wire format.
 */
export function createEncoder(model: string, dimension: number): Encoder {
  if (!model.startsWith("token-hash")) {
    throw new Error(
      `model ${model} is not bundled with this build; only token-hash-* is available offline`,
    );
  }
  return new TokenHashEncoder(model, dimension);
}
