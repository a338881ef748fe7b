/**
 * Figure builders on top of the run-directory readers.
 *
 * Four figures cover the simulation campaign: the spin relaxation curves
 * for several bath memory times (1), the comparison of hierarchy variants
 * at matched noise (2), the per-order trace norms of one run (3a), and
 * the distribution of final hierarchy orders with its exponential tail
 * fit (3b).  Rendering never writes into the input directories.
 */

import { mkdirSync, writeFileSync } from "fs";
import path from "path";

import {
  RUN_META_FILE,
  SigmaRun,
  assertSameTimeGrid,
  loadNqHist,
  loadQnorms,
  loadSigmaRun,
  readRunMeta,
} from "./csv.js";
import { tailFit } from "./fit.js";
import { LineSeries, PALETTE, barChart, lineChart } from "./svg.js";

export const FIGURE_IDS = ["1", "2", "3a", "3b"] as const;
export type FigureId = (typeof FIGURE_IDS)[number];

export interface FigureSpec {
  figureId: FigureId;
  inputDirs: string[];
  outputPath: string;
}

export interface RenderResult {
  svg: string;
  outputPath: string;
  /** human-readable findings, e.g. the tail-fit comparison for 3b */
  notes: string[];
}

function color(i: number): string {
  return PALETTE[i % PALETTE.length];
}

function gammaOf(run: SigmaRun): number {
  const raw = run.meta.config.gamma;
  const value = Number(raw);
  if (raw === undefined || Number.isNaN(value)) {
    throw new Error(`${path.join(run.dir, RUN_META_FILE)}: missing config key 'gamma'`);
  }
  return value;
}

/** Variant label from the run configuration, for the comparison figure. */
function variantLabel(run: SigmaRun): string {
  const cfg = run.meta.config;
  if (cfg.coupling_mode === "sigma_minus") return "L = σ−";
  if (cfg.hierarchy_mode === "bar_O_zero") return "memoryless (Ō = 0)";
  const cap = cfg.n_max ?? "?";
  return cfg.hierarchy_mode === "truncated" ? `N = ${cap} (fixed)` : `N = ${cap} (adaptive)`;
}

export function buildFig1(inputDirs: string[]): string {
  if (inputDirs.length < 1) throw new Error("figure 1 needs at least one run directory");
  const runs = inputDirs.map(loadSigmaRun);
  assertSameTimeGrid(runs);
  runs.sort((a, b) => gammaOf(a) - gammaOf(b));
  const series: LineSeries[] = runs.map((run, i) => ({
    x: run.t,
    y: run.mean,
    label: `γ = ${gammaOf(run)}`,
    color: color(i),
  }));
  return lineChart({
    title: "Spin relaxation for different bath memories",
    xLabel: "ωt",
    yLabel: "⟨σz⟩",
    series,
  });
}

export function buildFig2(inputDirs: string[]): string {
  if (inputDirs.length < 2) {
    throw new Error(`figure 2 compares variants, needs >= 2 run directories, got ${inputDirs.length}`);
  }
  const runs = inputDirs.map(loadSigmaRun);
  assertSameTimeGrid(runs);
  const series: LineSeries[] = runs.map((run, i) => ({
    x: run.t,
    y: run.mean,
    label: variantLabel(run),
    color: color(i),
  }));
  return lineChart({
    title: "Hierarchy variants at matched noise",
    xLabel: "ωt",
    yLabel: "⟨σz⟩",
    series,
  });
}

export function buildFig3a(inputDirs: string[]): string {
  if (inputDirs.length !== 1) {
    throw new Error(`figure 3a reads a single run directory, got ${inputDirs.length}`);
  }
  const orders = loadQnorms(inputDirs[0]);
  const series: LineSeries[] = orders.map((o, i) => ({
    x: o.t,
    y: o.norm,
    label: `n = ${o.n}`,
    color: color(i),
    width: 1.2,
  }));
  return lineChart({
    title: "Trace norms of the memory-operator terms",
    xLabel: "ωt",
    yLabel: "mean trace norm of Q_0^(n)",
    series,
    logY: true,
  });
}

export interface Fig3bResult {
  svg: string;
  rate: number;
  rSquared: number;
  referenceRate: number | null;
}

export function buildFig3b(inputDirs: string[]): Fig3bResult {
  if (inputDirs.length !== 1) {
    throw new Error(`figure 3b reads a single run directory, got ${inputDirs.length}`);
  }
  const dir = inputDirs[0];
  const hist = loadNqHist(dir);
  const fit = tailFit(hist.bins, hist.counts);
  if (!fit.fitted) {
    throw new Error(`${dir}: order histogram has no fittable tail (needs >= 2 occupied bins)`);
  }
  // overlay the fitted exponential across the tail window
  const occupied = hist.bins.filter((_, i) => hist.counts[i] > 0);
  const last = Math.max(...occupied);
  const overlayX: number[] = [];
  const overlayY: number[] = [];
  for (let n = fit.mode; n <= last; n++) {
    overlayX.push(n);
    overlayY.push(Math.exp(fit.intercept - fit.rate * n));
  }
  const meta = readRunMeta(path.join(dir, RUN_META_FILE));
  const reference = meta.results.nq_tail_rate ? Number(meta.results.nq_tail_rate) : null;
  const svg = barChart({
    title: "Final hierarchy order distribution",
    xLabel: "N_Q",
    yLabel: "trajectories",
    xs: hist.bins,
    counts: hist.counts,
    overlay: {
      x: overlayX,
      y: overlayY,
      label: `exp tail, rate ${fit.rate.toFixed(3)}/order`,
      color: "#c23b22",
      dash: "6,3",
    },
    caption: `r² = ${fit.rSquared.toFixed(3)}`,
  });
  return { svg, rate: fit.rate, rSquared: fit.rSquared, referenceRate: reference };
}

export function renderFigure(spec: FigureSpec): RenderResult {
  const notes: string[] = [];
  let svg: string;
  switch (spec.figureId) {
    case "1":
      svg = buildFig1(spec.inputDirs);
      break;
    case "2":
      svg = buildFig2(spec.inputDirs);
      break;
    case "3a":
      svg = buildFig3a(spec.inputDirs);
      break;
    case "3b": {
      const result = buildFig3b(spec.inputDirs);
      svg = result.svg;
      notes.push(`tail rate ${result.rate.toFixed(6)}/order, r^2 ${result.rSquared.toFixed(4)}`);
      if (result.referenceRate !== null) {
        const rel = Math.abs(result.rate - result.referenceRate) / Math.abs(result.referenceRate);
        notes.push(
          `run_meta rate ${result.referenceRate.toFixed(6)}, relative difference ${(rel * 100).toFixed(2)}%`
        );
      }
      break;
    }
    default:
      throw new Error(`unknown figure id '${spec.figureId as string}' (use 1, 2, 3a, 3b)`);
  }
  mkdirSync(path.dirname(path.resolve(spec.outputPath)), { recursive: true });
  writeFileSync(spec.outputPath, svg);
  return { svg, outputPath: spec.outputPath, notes };
}
