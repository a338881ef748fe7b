/**
 * Readers for the simulator's output directory format.
 *
 * Every run directory holds sigma_z.csv, qnorms.csv, nq_hist.csv and
 * run_meta.txt.  The CSVs are plain header-plus-float-rows; run_meta is
 * "key = value" lines grouped under "# configuration" and "# results"
 * markers.  All read errors name the offending file.
 */

import { readFileSync } from "fs";
import path from "path";

export type Columns = Record<string, number[]>;

export const SIGMA_Z_FILE = "sigma_z.csv";
export const QNORMS_FILE = "qnorms.csv";
export const NQ_HIST_FILE = "nq_hist.csv";
export const RUN_META_FILE = "run_meta.txt";

function readText(filePath: string): string {
  try {
    return readFileSync(filePath, "utf-8");
  } catch (err) {
    throw new Error(`cannot read ${filePath}: ${(err as Error).message}`);
  }
}

/** Parse one of the output CSVs into named float columns. */
export function readCsvColumns(filePath: string): Columns {
  const lines = readText(filePath).trim().split("\n");
  if (lines.length === 0 || lines[0].trim() === "") {
    throw new Error(`${filePath}: empty file`);
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const cols: Columns = {};
  for (const name of header) cols[name] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new Error(
        `${filePath}: row ${i + 1} has ${parts.length} fields, header has ${header.length}`
      );
    }
    for (let j = 0; j < header.length; j++) {
      const v = Number(parts[j]);
      if (Number.isNaN(v) && parts[j].trim().toLowerCase() !== "nan") {
        throw new Error(`${filePath}: row ${i + 1}, column '${header[j]}' is not numeric`);
      }
      cols[header[j]].push(v);
    }
  }
  return cols;
}

/** Assert the presence of columns, naming file and column otherwise. */
export function requireColumns(cols: Columns, names: string[], filePath: string): void {
  for (const name of names) {
    if (!(name in cols)) {
      throw new Error(`${filePath}: missing column '${name}'`);
    }
  }
}

export interface RunMeta {
  /** key = value pairs under "# configuration" */
  config: Record<string, string>;
  /** key = value pairs under "# results" (plus the top-level code_version) */
  results: Record<string, string>;
}

export function readRunMeta(filePath: string): RunMeta {
  const meta: RunMeta = { config: {}, results: {} };
  let section: "config" | "results" | null = null;
  for (const raw of readText(filePath).split("\n")) {
    const line = raw.trim();
    if (line === "# configuration") {
      section = "config";
      continue;
    }
    if (line === "# results") {
      section = "results";
      continue;
    }
    if (line === "" || line.startsWith("#")) {
      if (line.startsWith("#")) section = null;
      continue;
    }
    const eq = line.indexOf(" = ");
    if (eq < 0) continue;
    const key = line.slice(0, eq).trim();
    const value = line.slice(eq + 3).trim();
    if (section === "config") meta.config[key] = value;
    else if (section === "results") meta.results[key] = value;
    else if (key === "code_version") meta.results[key] = value;
  }
  return meta;
}

export interface SigmaRun {
  dir: string;
  t: number[];
  mean: number[];
  stderr: number[];
  meta: RunMeta;
}

export function loadSigmaRun(dir: string): SigmaRun {
  const file = path.join(dir, SIGMA_Z_FILE);
  const cols = readCsvColumns(file);
  requireColumns(cols, ["t", "mean_sigma_z", "stderr"], file);
  return {
    dir,
    t: cols.t,
    mean: cols.mean_sigma_z,
    stderr: cols.stderr,
    meta: readRunMeta(path.join(dir, RUN_META_FILE)),
  };
}

export interface QnormSeries {
  n: number;
  t: number[];
  norm: number[];
}

/** Long-format qnorms.csv split into one series per hierarchy order. */
export function loadQnorms(dir: string): QnormSeries[] {
  const file = path.join(dir, QNORMS_FILE);
  const cols = readCsvColumns(file);
  requireColumns(cols, ["t", "n", "mean_trace_norm"], file);
  const byOrder = new Map<number, QnormSeries>();
  for (let i = 0; i < cols.t.length; i++) {
    const n = cols.n[i];
    let series = byOrder.get(n);
    if (!series) {
      series = { n, t: [], norm: [] };
      byOrder.set(n, series);
    }
    series.t.push(cols.t[i]);
    series.norm.push(cols.mean_trace_norm[i]);
  }
  return [...byOrder.values()].sort((a, b) => a.n - b.n);
}

export interface NqHist {
  bins: number[];
  counts: number[];
  density: number[];
}

export function loadNqHist(dir: string): NqHist {
  const file = path.join(dir, NQ_HIST_FILE);
  const cols = readCsvColumns(file);
  requireColumns(cols, ["n_q", "count", "probability_density"], file);
  return { bins: cols.n_q, counts: cols.count, density: cols.probability_density };
}

/** Exact-grid check for figures overlaying several runs. */
export function assertSameTimeGrid(runs: SigmaRun[]): void {
  const ref = runs[0];
  for (const run of runs.slice(1)) {
    const same =
      run.t.length === ref.t.length && run.t.every((v, i) => v === ref.t[i]);
    if (!same) {
      throw new Error(
        `time grids differ between ${ref.dir} (${ref.t.length} points) and ` +
          `${run.dir} (${run.t.length} points)`
      );
    }
  }
}
