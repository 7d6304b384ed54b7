/**
 * CSV loading with strict header validation.
 *
 * The simulator writes three CSV shapes we consume here; the header of
 * every input is checked column-by-column against the documented schema
 * before any row is parsed, and a mismatch reports the offending column
 * by name.
 */
import * as fs from 'fs';
import Papa from 'papaparse';

export const VIEW_COLUMNS = [
  'scenario',
  'seed',
  'view',
  'variant',
  'outcome',
  'latency_ticks',
  'discarded',
  'forks_cum',
  'chain_len_min',
  'chain_len_max',
  'awake',
  'byz_awake',
] as const;

export const LATENCY_COLUMNS = [
  'scenario',
  'seed',
  'variant',
  'txid',
  'submit_tick',
  'decide_tick',
  'latency_ticks',
  'censored',
] as const;

export const BENCH_COLUMNS = [
  'profile',
  'n',
  't',
  'operation',
  'median_ms',
  'repeats',
] as const;

export interface ViewRow {
  scenario: string;
  seed: number;
  view: number;
  variant: string;
  outcome: string;
  latency_ticks: number | null;
  discarded: number;
  forks_cum: number;
  chain_len_min: number;
  chain_len_max: number;
  awake: number;
  byz_awake: number;
}

export interface LatencyRow {
  scenario: string;
  seed: number;
  variant: string;
  txid: number;
  submit_tick: number;
  decide_tick: number | null;
  latency_ticks: number | null;
  censored: boolean;
}

export interface BenchRow {
  profile: string;
  n: number;
  t: number;
  operation: string;
  median_ms: number;
  repeats: number;
}

export class CsvError extends Error {}

/** First header deviation, named; also flags missing/extra columns. */
export function checkHeader(
  path: string,
  actual: string[],
  expected: readonly string[],
): void {
  const limit = Math.min(actual.length, expected.length);
  for (let i = 0; i < limit; i++) {
    if (actual[i] !== expected[i]) {
      throw new CsvError(
        `${path}: header mismatch at column ${i + 1}: ` +
          `expected '${expected[i]}', found '${actual[i]}'`,
      );
    }
  }
  if (actual.length < expected.length) {
    throw new CsvError(`${path}: missing column '${expected[actual.length]}'`);
  }
  if (actual.length > expected.length) {
    throw new CsvError(`${path}: unexpected column '${actual[expected.length]}'`);
  }
}

function parseTable(path: string, expected: readonly string[]): string[][] {
  let text: string;
  try {
    text = fs.readFileSync(path, 'utf-8');
  } catch (err) {
    throw new CsvError(`cannot read ${path}: ${(err as Error).message}`);
  }
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new CsvError(`${path}: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new CsvError(`${path}: empty file (no header)`);
  }
  checkHeader(path, rows[0], expected);
  if (rows.length === 1) {
    throw new CsvError(`${path}: no data rows`);
  }
  return rows.slice(1);
}

function num(path: string, field: string, raw: string): number {
  const v = Number(raw);
  if (raw === '' || !Number.isFinite(v)) {
    throw new CsvError(`${path}: field '${field}' is not a number: '${raw}'`);
  }
  return v;
}

function numOrBlank(path: string, field: string, raw: string): number | null {
  return raw === '' ? null : num(path, field, raw);
}

export function readViews(path: string): ViewRow[] {
  return parseTable(path, VIEW_COLUMNS).map(r => ({
    scenario: r[0],
    seed: num(path, 'seed', r[1]),
    view: num(path, 'view', r[2]),
    variant: r[3],
    outcome: r[4],
    latency_ticks: numOrBlank(path, 'latency_ticks', r[5]),
    discarded: num(path, 'discarded', r[6]),
    forks_cum: num(path, 'forks_cum', r[7]),
    chain_len_min: num(path, 'chain_len_min', r[8]),
    chain_len_max: num(path, 'chain_len_max', r[9]),
    awake: num(path, 'awake', r[10]),
    byz_awake: num(path, 'byz_awake', r[11]),
  }));
}

export function readLatencies(path: string): LatencyRow[] {
  return parseTable(path, LATENCY_COLUMNS).map(r => ({
    scenario: r[0],
    seed: num(path, 'seed', r[1]),
    variant: r[2],
    txid: num(path, 'txid', r[3]),
    submit_tick: num(path, 'submit_tick', r[4]),
    decide_tick: numOrBlank(path, 'decide_tick', r[5]),
    latency_ticks: numOrBlank(path, 'latency_ticks', r[6]),
    censored: r[7] === '1',
  }));
}

export function readBench(path: string): BenchRow[] {
  return parseTable(path, BENCH_COLUMNS).map(r => ({
    profile: r[0],
    n: num(path, 'n', r[1]),
    t: num(path, 't', r[2]),
    operation: r[3],
    median_ms: num(path, 'median_ms', r[4]),
    repeats: num(path, 'repeats', r[5]),
  }));
}
