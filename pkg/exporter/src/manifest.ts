/** JSON manifest sidecars matching the consumer pipeline's schema. */

import { promises as fs } from 'node:fs';

export interface AttributesManifest {
  kind: 'attributes';
  texts: string[];
}

export interface VisualManifest {
  kind: 'visual';
  class_ids: number[];
  task_index: number;
  labels?: string[];
}

export type Manifest = AttributesManifest | VisualManifest;

export async function writeManifest(path: string, manifest: Manifest): Promise<void> {
  if (manifest.kind === 'visual') {
    if (!Number.isInteger(manifest.task_index)) {
      throw new Error('visual manifests need an integer task_index');
    }
    for (const id of manifest.class_ids) {
      if (!Number.isInteger(id)) {
        throw new Error(`class id ${id} is not an integer`);
      }
    }
  }
  const entries = manifest as unknown as Record<string, unknown>;
  const ordered: Record<string, unknown> = {};
  for (const key of Object.keys(entries).sort()) {
    ordered[key] = entries[key];
  }
  await fs.writeFile(path, JSON.stringify(ordered, null, 2) + '\n');
}
