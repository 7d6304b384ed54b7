#!/usr/bin/env node
/**
 * Render one figure from simulator CSV output.
 *
 * Usage:
 *   node dist/render.js <kind> --out <figure.svg> <input.csv> [input2.csv]
 *
 * Kinds and their inputs:
 *   forks                  views.csv (sweep over malicious counts)
 *   discards               views.csv (same sweep)
 *   chain_length           views.csv (timeline run)
 *   pvss_bench             bench.csv
 *   latency_participation  views.csv latency.csv (timeline run)
 *
 * The output file is only written when the whole figure rendered; any
 * schema or data problem exits nonzero with the offending detail on
 * stderr and leaves no image behind.
 */
import * as fs from 'fs';
import * as path from 'path';
import { CsvError } from './csv';
import { FIGURE_KINDS, FigureError, FigureKind, buildFigure } from './figures';
import { renderSvg } from './svg';

function usage(): string {
  return (
    'usage: render <kind> --out <figure.svg> <input.csv> [input2.csv]\n' +
    `  kinds: ${FIGURE_KINDS.join(', ')}`
  );
}

export function main(argv: string[]): number {
  const args = [...argv];
  let out: string | null = null;
  const positional: string[] = [];
  while (args.length > 0) {
    const a = args.shift()!;
    if (a === '--out' || a === '-o') {
      out = args.shift() ?? null;
      if (out === null) {
        console.error('--out needs a path');
        return 2;
      }
    } else if (a === '--help' || a === '-h') {
      console.log(usage());
      return 0;
    } else {
      positional.push(a);
    }
  }
  if (positional.length < 2 || out === null) {
    console.error(usage());
    return 2;
  }
  const [kind, ...inputs] = positional;
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    console.error(`unknown figure kind '${kind}'\n${usage()}`);
    return 2;
  }
  try {
    const panels = buildFigure(kind as FigureKind, inputs);
    const svg = renderSvg(panels);
    fs.mkdirSync(path.dirname(path.resolve(out)), { recursive: true });
    fs.writeFileSync(out, svg);
  } catch (err) {
    if (err instanceof CsvError || err instanceof FigureError) {
      console.error(err.message);
      return 1;
    }
    throw err;
  }
  console.log(`wrote ${out}`);
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
