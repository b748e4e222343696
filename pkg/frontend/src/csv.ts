// Readers for the CSV and text artifacts the ckreg pipeline writes.
// Every parse failure reports the 1-based line number of the offending line.

import { readFileSync } from 'fs';

export interface Table {
  columns: string[];
  rows: number[][];
}

function parseNumber(field: string, path: string, lineNo: number): number {
  const v = Number(field);
  if (field.trim() === '' || Number.isNaN(v)) {
    throw new Error(`${path}:${lineNo}: not a number: "${field}"`);
  }
  return v;
}

/** Header + numeric rows, comma separated. Empty data section is an error. */
export function readTable(path: string): Table {
  const text = readFileSync(path, 'utf8');
  const lines = text.split('\n');
  let header: string[] | null = null;
  const rows: number[][] = [];
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === '' || line.startsWith('#')) continue;
    if (header === null) {
      header = line.split(',').map((c) => c.trim());
      continue;
    }
    const fields = line.split(',');
    if (fields.length !== header.length) {
      throw new Error(
        `${path}:${i + 1}: expected ${header.length} fields, got ${fields.length}`,
      );
    }
    rows.push(fields.map((f) => parseNumber(f, path, i + 1)));
  }
  if (header === null) throw new Error(`${path}: empty file`);
  if (rows.length === 0) throw new Error(`${path}: no data rows`);
  return { columns: header, rows };
}

/** Index of a named column, or an error naming what is missing. */
export function column(table: Table, name: string, path: string): number {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new Error(`${path}: missing column "${name}" (have: ${table.columns.join(', ')})`);
  }
  return idx;
}

export interface Triplet {
  i: number;
  j: number;
  value: number;
}

/**
 * Sparse-matrix entries, one "i j value" per line. The solver's plain dump
 * is space separated without a header; the CLI's kernel.csv uses commas and
 * a header line. Both are accepted.
 */
export function readTriplets(path: string): Triplet[] {
  const text = readFileSync(path, 'utf8');
  const lines = text.split('\n');
  const out: Triplet[] = [];
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === '' || line.startsWith('#')) continue;
    if (i === 0 && /^i\s*,\s*j\s*,\s*value$/.test(line)) continue;
    const fields = line.includes(',') ? line.split(',') : line.split(/\s+/);
    if (fields.length !== 3) {
      throw new Error(`${path}:${i + 1}: expected "i j value", got "${line}"`);
    }
    const [fi, fj, fv] = fields.map((f) => parseNumber(f, path, i + 1));
    if (!Number.isInteger(fi) || !Number.isInteger(fj) || fi < 0 || fj < 0) {
      throw new Error(`${path}:${i + 1}: indices must be nonnegative integers`);
    }
    out.push({ i: fi, j: fj, value: fv });
  }
  if (out.length === 0) throw new Error(`${path}: no entries`);
  return out;
}

export interface TrajectoryPoint {
  t: number;
  x: number;
  y: number;
  z: number;
}

/** TUM trajectory lines: "timestamp tx ty tz qx qy qz qw", # comments skipped. */
export function readTrajectory(path: string): TrajectoryPoint[] {
  const text = readFileSync(path, 'utf8');
  const lines = text.split('\n');
  const out: TrajectoryPoint[] = [];
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === '' || line.startsWith('#')) continue;
    const fields = line.split(/\s+/);
    if (fields.length !== 8) {
      throw new Error(`${path}:${i + 1}: expected 8 fields, got ${fields.length}`);
    }
    const nums = fields.map((f) => parseNumber(f, path, i + 1));
    out.push({ t: nums[0], x: nums[1], y: nums[2], z: nums[3] });
  }
  if (out.length === 0) throw new Error(`${path}: no poses`);
  return out;
}
