/** The two export jobs: attribute word lists and image annotation lists.
 *
 * Strictly an I/O bridge: texts are rendered through the shared prompt
 * template, vectors come from the resolved encoder, and the outputs are
 * one CEB1 + manifest pair per job. No similarity or matrix math here.
 */

import { promises as fs } from 'node:fs';
import * as path from 'node:path';

import { writeCeb1 } from './ceb1.js';
import { resolveEncoder } from './encoders.js';
import { writeManifest } from './manifest.js';
import { applyPromptTemplate, canonicalCategory } from './template.js';

export interface ExportResult {
  ceb1Path: string;
  manifestPath: string;
  rows: number;
  dim: number;
}

async function readNonEmptyLines(filePath: string): Promise<string[]> {
  const raw = await fs.readFile(filePath, 'utf8');
  return raw
    .split('\n')
    .map((line) => line.trim())
    .filter((line) => line.length > 0 && !line.startsWith('#'));
}

/** Word list format: one `<category>,<value>` per line. */
export async function exportAttributeEmbeddings(
  wordListPath: string,
  encoderId: string,
  outDir: string,
  baseName = 'attributes',
): Promise<ExportResult> {
  const encoder = resolveEncoder(encoderId);
  const lines = await readNonEmptyLines(wordListPath);
  if (lines.length === 0) {
    throw new Error(`${wordListPath}: word list is empty`);
  }
  const texts: string[] = [];
  for (const line of lines) {
    const comma = line.indexOf(',');
    if (comma < 0) {
      throw new Error(`${wordListPath}: expected "<category>,<value>", got ${JSON.stringify(line)}`);
    }
    const category = canonicalCategory(line.slice(0, comma));
    const value = line.slice(comma + 1).trim();
    texts.push(applyPromptTemplate(category, value));
  }

  const vectors = texts.map((text) => encoder.embedText(text));
  await fs.mkdir(outDir, { recursive: true });
  const ceb1Path = path.join(outDir, `${baseName}.ceb1`);
  const manifestPath = path.join(outDir, `${baseName}.manifest.json`);
  await writeCeb1(ceb1Path, vectors);
  await writeManifest(manifestPath, { kind: 'attributes', texts });
  return { ceb1Path, manifestPath, rows: texts.length, dim: encoder.dim };
}

/** Annotation list format: one `<image_path>,<class_id>` per line; paths
 * are resolved relative to the list file. Rows are written as produced
 * by the encoder; the consumer normalizes on ingestion. */
export async function exportVisualEmbeddings(
  annotationListPath: string,
  encoderId: string,
  outDir: string,
  taskIndex: number,
  baseName?: string,
): Promise<ExportResult> {
  const encoder = resolveEncoder(encoderId);
  const lines = await readNonEmptyLines(annotationListPath);
  if (lines.length === 0) {
    throw new Error(`${annotationListPath}: annotation list is empty`);
  }
  const listDir = path.dirname(path.resolve(annotationListPath));
  const classIds: number[] = [];
  const vectors: Float32Array[] = [];
  for (const line of lines) {
    const comma = line.lastIndexOf(',');
    if (comma < 0) {
      throw new Error(`${annotationListPath}: expected "<image_path>,<class_id>", got ${JSON.stringify(line)}`);
    }
    const imagePath = line.slice(0, comma).trim();
    const idText = line.slice(comma + 1).trim();
    if (!/^-?\d+$/.test(idText)) {
      throw new Error(`${annotationListPath}: class id ${JSON.stringify(idText)} is not an integer`);
    }
    let bytes: Buffer;
    try {
      bytes = await fs.readFile(path.resolve(listDir, imagePath));
    } catch (err) {
      throw new Error(`cannot read image ${imagePath}: ${(err as Error).message}`);
    }
    classIds.push(Number(idText));
    vectors.push(encoder.embedImage(bytes));
  }

  await fs.mkdir(outDir, { recursive: true });
  const stem = baseName ?? `task_${String(taskIndex).padStart(2, '0')}`;
  const ceb1Path = path.join(outDir, `${stem}.ceb1`);
  const manifestPath = path.join(outDir, `${stem}.manifest.json`);
  await writeCeb1(ceb1Path, vectors);
  await writeManifest(manifestPath, {
    kind: 'visual',
    class_ids: classIds,
    task_index: taskIndex,
  });
  return { ceb1Path, manifestPath, rows: classIds.length, dim: encoder.dim };
}
