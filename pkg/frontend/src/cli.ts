#!/usr/bin/env node
// plotkit <kind> --in <csv> [--in <csv>] --out <svg>
//
// Kinds: cdf (per-step RPE or exported CDF table), sparsity (kernel
// triplets), taylor (t,G,taylor2,taylor4 samples), trajectory (TUM pose
// file; a second --in overlays ground truth). Output is SVG; the figure is
// a pure function of the inputs, so reruns are byte-identical.

import { writeFileSync } from 'fs';
import { readTable, readTrajectory, readTriplets } from './csv.js';
import { plotCdf, plotSparsity, plotTaylor, plotTrajectory } from './plots.js';

const KINDS = ['cdf', 'sparsity', 'taylor', 'trajectory'] as const;
type Kind = (typeof KINDS)[number];

export interface Args {
  kind: Kind;
  inputs: string[];
  out: string;
}

export function parseArgs(argv: string[]): Args {
  if (argv.length === 0) {
    throw new Error(`usage: plotkit <${KINDS.join('|')}> --in <csv> [--in <csv>] --out <svg>`);
  }
  const kind = argv[0] as Kind;
  if (!KINDS.includes(kind)) {
    throw new Error(`unknown kind "${argv[0]}" (expected one of: ${KINDS.join(', ')})`);
  }
  const inputs: string[] = [];
  let out: string | null = null;
  for (let i = 1; i < argv.length; i++) {
    if (argv[i] === '--in') {
      if (i + 1 >= argv.length) throw new Error('--in needs a path');
      inputs.push(argv[++i]);
    } else if (argv[i] === '--out') {
      if (i + 1 >= argv.length) throw new Error('--out needs a path');
      out = argv[++i];
    } else {
      throw new Error(`unknown argument "${argv[i]}"`);
    }
  }
  if (inputs.length === 0) throw new Error('at least one --in is required');
  if (out === null) throw new Error('--out is required');
  const maxInputs = kind === 'trajectory' ? 2 : 1;
  if (inputs.length > maxInputs) {
    throw new Error(`${kind} takes at most ${maxInputs} --in argument(s)`);
  }
  return { kind, inputs, out };
}

export function render(args: Args): string {
  switch (args.kind) {
    case 'cdf':
      return plotCdf(readTable(args.inputs[0]), args.inputs[0]);
    case 'sparsity':
      return plotSparsity(readTriplets(args.inputs[0]));
    case 'taylor':
      return plotTaylor(readTable(args.inputs[0]), args.inputs[0]);
    case 'trajectory':
      return plotTrajectory(
        readTrajectory(args.inputs[0]),
        args.inputs.length > 1 ? readTrajectory(args.inputs[1]) : null,
      );
  }
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    writeFileSync(args.out, render(args));
    return 0;
  } catch (e) {
    process.stderr.write(`plotkit: ${e instanceof Error ? e.message : String(e)}\n`);
    return 1;
  }
}

const entry = process.argv[1] ?? '';
if (entry.endsWith('cli.js') || entry.endsWith('plotkit')) {
  process.exit(main(process.argv.slice(2)));
}
