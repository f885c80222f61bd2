#!/usr/bin/env node
/** Command line:
 *
 *   attrshare-export attributes --words <file> --encoder <id> --out <dir> [--name <stem>]
 *   attrshare-export visual --annotations <file> --encoder <id> --out <dir>
 *                           --task <n> [--name <stem>]
 */

import { exportAttributeEmbeddings, exportVisualEmbeddings } from './export.js';

function parseFlags(args: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < args.length; i += 2) {
    const key = args[i];
    const value = args[i + 1];
    if (!key.startsWith('--') || value === undefined) {
      throw new Error(`malformed arguments near ${key}`);
    }
    flags.set(key.slice(2), value);
  }
  return flags;
}

function need(flags: Map<string, string>, key: string): string {
  const value = flags.get(key);
  if (value === undefined) {
    throw new Error(`missing required flag --${key}`);
  }
  return value;
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  try {
    if (command === 'attributes') {
      const flags = parseFlags(rest);
      const result = await exportAttributeEmbeddings(
        need(flags, 'words'),
        need(flags, 'encoder'),
        need(flags, 'out'),
        flags.get('name') ?? 'attributes',
      );
      console.log(JSON.stringify(result, null, 2));
      return 0;
    }
    if (command === 'visual') {
      const flags = parseFlags(rest);
      const task = Number(need(flags, 'task'));
      if (!Number.isInteger(task) || task < 1) {
        throw new Error(`--task must be a positive integer, got ${flags.get('task')}`);
      }
      const result = await exportVisualEmbeddings(
        need(flags, 'annotations'),
        need(flags, 'encoder'),
        need(flags, 'out'),
        task,
        flags.get('name'),
      );
      console.log(JSON.stringify(result, null, 2));
      return 0;
    }
    console.error('usage: attrshare-export <attributes|visual> [flags]');
    return 2;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
