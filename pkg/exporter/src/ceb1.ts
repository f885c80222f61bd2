/** CEB1 writer (and a reader for self-checks).
 *
 * Layout: magic "CEB1" | u32 version=1 | u32 dim | u64 rows | rows*dim
 * little-endian float32, row-major. The consumer pipeline validates the
 * header on every load, so any drift here fails loudly downstream.
 */

import { promises as fs } from 'node:fs';

export const CEB1_MAGIC = 'CEB1';
export const CEB1_VERSION = 1;
const HEADER_BYTES = 20;

export function encodeCeb1(rows: number, dim: number, values: Float32Array): Buffer {
  if (dim <= 0) {
    throw new Error('embedding dimension must be positive');
  }
  if (values.length !== rows * dim) {
    throw new Error(`expected ${rows * dim} values, got ${values.length}`);
  }
  for (const v of values) {
    if (!Number.isFinite(v)) {
      throw new Error('embeddings contain non-finite values');
    }
  }
  const buf = Buffer.alloc(HEADER_BYTES + values.length * 4);
  buf.write(CEB1_MAGIC, 0, 'ascii');
  buf.writeUInt32LE(CEB1_VERSION, 4);
  buf.writeUInt32LE(dim, 8);
  buf.writeBigUInt64LE(BigInt(rows), 12);
  for (let i = 0; i < values.length; i++) {
    buf.writeFloatLE(values[i], HEADER_BYTES + i * 4);
  }
  return buf;
}

export async function writeCeb1(path: string, rowVectors: Float32Array[]): Promise<void> {
  const rows = rowVectors.length;
  const dim = rows > 0 ? rowVectors[0].length : 0;
  const flat = new Float32Array(rows * dim);
  rowVectors.forEach((row, i) => {
    if (row.length !== dim) {
      throw new Error(`row ${i} has length ${row.length}, expected ${dim}`);
    }
    flat.set(row, i * dim);
  });
  await fs.writeFile(path, encodeCeb1(rows, dim, flat));
}

export function decodeCeb1(raw: Buffer): { rows: number; dim: number; values: Float32Array } {
  if (raw.length < HEADER_BYTES) {
    throw new Error('too short for a CEB1 header');
  }
  if (raw.toString('ascii', 0, 4) !== CEB1_MAGIC) {
    throw new Error('bad CEB1 magic');
  }
  const version = raw.readUInt32LE(4);
  if (version !== CEB1_VERSION) {
    throw new Error(`unsupported CEB1 version ${version}`);
  }
  const dim = raw.readUInt32LE(8);
  const rows = Number(raw.readBigUInt64LE(12));
  const expected = HEADER_BYTES + rows * dim * 4;
  if (raw.length !== expected) {
    throw new Error(`payload is ${raw.length - HEADER_BYTES} bytes, expected ${expected - HEADER_BYTES}`);
  }
  const values = new Float32Array(rows * dim);
  for (let i = 0; i < values.length; i++) {
    values[i] = raw.readFloatLE(HEADER_BYTES + i * 4);
  }
  return { rows, dim, values };
}
