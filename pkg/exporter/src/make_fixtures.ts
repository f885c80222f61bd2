/** Writes the conformance fixtures the consumer pipeline's test suite
 * reads back: a hand-valued 3x4 matrix (every value exactly
 * representable in float32) plus one real attributes export and one
 * real visual export produced by the hash encoder.
 *
 *   node dist/make_fixtures.js <out-dir>
 */

import { promises as fs } from 'node:fs';
import * as path from 'node:path';

import { writeCeb1 } from './ceb1.js';
import { exportAttributeEmbeddings, exportVisualEmbeddings } from './export.js';
import { writeManifest } from './manifest.js';

export const HAND_VALUED_ROWS: number[][] = [
  [1.5, -2.25, 0.125, 3.0],
  [0.0, 7.5, -0.5, 1.0],
  [9.0, 0.25, -4.0, 2.5],
];

export async function writeHandValuedFixture(outDir: string): Promise<string> {
  await fs.mkdir(outDir, { recursive: true });
  const ceb1Path = path.join(outDir, 'handvalued.ceb1');
  await writeCeb1(ceb1Path, HAND_VALUED_ROWS.map((row) => Float32Array.from(row)));
  await writeManifest(path.join(outDir, 'handvalued.manifest.json'), {
    kind: 'visual',
    class_ids: [1, 1, 2],
    task_index: 1,
  });
  return ceb1Path;
}

async function main(): Promise<void> {
  const outDir = process.argv[2];
  if (!outDir) {
    console.error('usage: make_fixtures <out-dir>');
    process.exit(2);
  }
  await writeHandValuedFixture(outDir);

  const wordList = path.join(outDir, 'words.csv');
  await fs.writeFile(
    wordList,
    ['Color,red', 'Shape,round', 'Material,wood', 'Texture,striped'].join('\n') + '\n',
  );
  await exportAttributeEmbeddings(wordList, 'hash-16', outDir);

  const imagesDir = path.join(outDir, 'images');
  await fs.mkdir(imagesDir, { recursive: true });
  const annotations: string[] = [];
  for (let i = 0; i < 6; i++) {
    const imageName = `img_${i}.bin`;
    await fs.writeFile(path.join(imagesDir, imageName), Buffer.from([i, 2 * i, 7, 42 + i]));
    annotations.push(`images/${imageName},${i < 3 ? 10 : 11}`);
  }
  const annotationList = path.join(outDir, 'annotations.csv');
  await fs.writeFile(annotationList, annotations.join('\n') + '\n');
  await exportVisualEmbeddings(annotationList, 'hash-16', outDir, 1, 'visual');

  console.log(`fixtures written to ${outDir}`);
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  path.resolve(process.argv[1]) === new URL(import.meta.url).pathname;
if (invokedDirectly) {
  main().catch((err) => {
    console.error(err.message);
    process.exit(1);
  });
}
