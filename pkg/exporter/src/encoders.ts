/** Encoder registry.
 *
 * An encoder id is a string the exporter resolves; the consumer pipeline
 * only ever sees the output dimension and the float payload. The
 * built-in `hash-<dim>` family maps input bytes to a deterministic
 * pseudo-random direction (FNV-1a seed into a SplitMix64 stream), which
 * makes exports reproducible byte-for-byte with zero model downloads:
 * ideal for fixtures, format checks, and pipeline plumbing tests. Real
 * model-backed encoders plug in through the same interface via
 * `registerEncoderFamily`.
 */

export interface Encoder {
  readonly id: string;
  readonly dim: number;
  embedText(text: string): Float32Array;
  embedImage(bytes: Buffer): Float32Array;
}

type EncoderFactory = (id: string) => Encoder | undefined;

const FAMILIES: EncoderFactory[] = [];

export function registerEncoderFamily(factory: EncoderFactory): void {
  FAMILIES.push(factory);
}

export function resolveEncoder(id: string): Encoder {
  for (const factory of FAMILIES) {
    const encoder = factory(id);
    if (encoder !== undefined) {
      return encoder;
    }
  }
  throw new Error(
    `unknown encoder ${JSON.stringify(id)}; built-in family: hash-<dim> (e.g. hash-64)`,
  );
}

// ---- deterministic hash encoder ---------------------------------------

const MASK64 = (1n << 64n) - 1n;

function fnv1a64(bytes: Buffer): bigint {
  let hash = 0xcbf29ce484222325n;
  for (const byte of bytes) {
    hash ^= BigInt(byte);
    hash = (hash * 0x100000001b3n) & MASK64;
  }
  return hash;
}

function splitmix64Stream(seed: bigint, count: number): Float64Array {
  const out = new Float64Array(count);
  let state = seed & MASK64;
  for (let i = 0; i < count; i++) {
    state = (state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    z = z ^ (z >> 31n);
    // top 53 bits to a double in [0, 1), then spread over [-1, 1)
    out[i] = 2.0 * (Number(z >> 11n) / 2 ** 53) - 1.0;
  }
  return out;
}

class HashEncoder implements Encoder {
  constructor(readonly id: string, readonly dim: number) {}

  private embedBytes(bytes: Buffer): Float32Array {
    const raw = splitmix64Stream(fnv1a64(bytes), this.dim);
    let norm = 0;
    for (const v of raw) norm += v * v;
    norm = Math.sqrt(norm);
    const out = new Float32Array(this.dim);
    for (let i = 0; i < this.dim; i++) {
      out[i] = raw[i] / norm;
    }
    return out;
  }

  embedText(text: string): Float32Array {
    return this.embedBytes(Buffer.from(text, 'utf8'));
  }

  embedImage(bytes: Buffer): Float32Array {
    return this.embedBytes(bytes);
  }
}

registerEncoderFamily((id) => {
  const match = /^hash-(\d+)$/.exec(id);
  if (match === null) {
    return undefined;
  }
  const dim = Number(match[1]);
  if (dim <= 0) {
    throw new Error(`encoder ${id} has dimension 0`);
  }
  return new HashEncoder(id, dim);
});
