/**
 * Minimal deterministic SVG charts (no timestamps, fixed styling).
 *
 * Two builders cover the figures: multi-series line charts with linear or
 * log y, and a log-y count histogram with an optional overlay line for a
 * fitted tail.  Output is a function of the inputs alone, so identical
 * data renders byte-identical files.
 */

export const PALETTE = ["#1f5fa8", "#c23b22", "#2d8a4e", "#8a4d9e", "#b8860b", "#4a4a4a"];

export interface LineSeries {
  x: number[];
  y: number[];
  label: string;
  color: string;
  width?: number;
  dash?: string;
}

export interface LineChartOpts {
  title: string;
  xLabel: string;
  yLabel: string;
  series: LineSeries[];
  logY?: boolean;
  yMin?: number;
  yMax?: number;
}

export interface BarChartOpts {
  title: string;
  xLabel: string;
  yLabel: string;
  xs: number[];
  counts: number[];
  overlay?: LineSeries;
  caption?: string;
}

const W = 640;
const H = 400;
const ML = 64;
const MR = 18;
const MT = 34;
const MB = 48;
const PW = W - ML - MR;
const PH = H - MT - MB;

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0).replace("+", "");
  const text = v.toPrecision(4);
  return text.includes(".") ? text.replace(/\.?0+$/, "") : text;
}

function niceTicks(min: number, max: number, count = 6): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => s >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function decadeTicks(minExp: number, maxExp: number): number[] {
  const step = Math.max(1, Math.ceil((maxExp - minExp) / 8));
  const ticks: number[] = [];
  for (let e = Math.ceil(minExp); e <= maxExp; e += step) ticks.push(Math.pow(10, e));
  return ticks;
}

interface Frame {
  xOf: (v: number) => number;
  yOf: (v: number) => number;
  yTicks: number[];
  xTicks: number[];
}

function openSvg(title: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" ` +
    `font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${W}" height="${H}" fill="#fff"/>\n` +
    `<text x="${ML}" y="${MT - 12}" font-size="13" font-weight="600" fill="#222">${esc(title)}</text>\n`
  );
}

function drawFrame(frame: Frame, xLabel: string, yLabel: string, logY: boolean): string {
  let s = "";
  for (const v of frame.yTicks) {
    const y = frame.yOf(v).toFixed(1);
    s += `<line x1="${ML}" y1="${y}" x2="${ML + PW}" y2="${y}" stroke="#eee" stroke-width="0.6"/>\n`;
    s += `<line x1="${ML - 4}" y1="${y}" x2="${ML}" y2="${y}" stroke="#333" stroke-width="0.6"/>\n`;
    const label = logY ? `1e${Math.round(Math.log10(v))}` : fmt(v);
    s += `<text x="${ML - 7}" y="${(frame.yOf(v) + 3.5).toFixed(1)}" text-anchor="end" font-size="10" fill="#555">${esc(label)}</text>\n`;
  }
  for (const v of frame.xTicks) {
    const x = frame.xOf(v).toFixed(1);
    s += `<line x1="${x}" y1="${MT + PH}" x2="${x}" y2="${MT + PH + 4}" stroke="#333" stroke-width="0.6"/>\n`;
    s += `<text x="${x}" y="${MT + PH + 16}" text-anchor="middle" font-size="10" fill="#555">${esc(fmt(v))}</text>\n`;
  }
  s += `<line x1="${ML}" y1="${MT}" x2="${ML}" y2="${MT + PH}" stroke="#333" stroke-width="0.8"/>\n`;
  s += `<line x1="${ML}" y1="${MT + PH}" x2="${ML + PW}" y2="${MT + PH}" stroke="#333" stroke-width="0.8"/>\n`;
  s += `<text x="${ML + PW / 2}" y="${H - 10}" text-anchor="middle" font-size="12" fill="#333">${esc(xLabel)}</text>\n`;
  s += `<text x="16" y="${MT + PH / 2}" text-anchor="middle" font-size="12" fill="#333" transform="rotate(-90,16,${MT + PH / 2})">${esc(yLabel)}</text>\n`;
  return s;
}

function drawLegend(entries: { label: string; color: string; dash?: string }[]): string {
  const width = Math.max(...entries.map((e) => e.label.length)) * 6 + 30;
  const x0 = ML + PW - width - 6;
  let s = `<rect x="${x0 - 4}" y="${MT + 4}" width="${width + 8}" height="${entries.length * 15 + 8}" rx="3" fill="#fff" fill-opacity="0.88" stroke="#ccc" stroke-width="0.5"/>\n`;
  entries.forEach((e, i) => {
    const y = MT + 15 + i * 15;
    s += `<line x1="${x0}" y1="${y}" x2="${x0 + 18}" y2="${y}" stroke="${e.color}" stroke-width="1.6"${e.dash ? ` stroke-dasharray="${e.dash}"` : ""}/>\n`;
    s += `<text x="${x0 + 23}" y="${y + 3.5}" font-size="10" fill="#333">${esc(e.label)}</text>\n`;
  });
  return s;
}

/** Polyline points, split into segments wherever a value is unplottable. */
function polylineSegments(
  xs: number[],
  ys: number[],
  xOf: (v: number) => number,
  yOf: (v: number) => number,
  plottable: (v: number) => boolean
): string[] {
  const segments: string[] = [];
  let current: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (plottable(ys[i])) {
      current.push(`${xOf(xs[i]).toFixed(2)},${yOf(ys[i]).toFixed(2)}`);
    } else if (current.length > 0) {
      segments.push(current.join(" "));
      current = [];
    }
  }
  if (current.length > 0) segments.push(current.join(" "));
  return segments;
}

export function lineChart(opts: LineChartOpts): string {
  const { series, logY = false } = opts;
  if (series.length === 0) throw new Error("line chart needs at least one series");
  const allX = series.flatMap((s) => s.x);
  const xMin = Math.min(...allX);
  const xMax = Math.max(...allX);
  const plottable = (v: number) => Number.isFinite(v) && (!logY || v > 0);
  const allY = series.flatMap((s) => s.y).filter(plottable);
  if (allY.length === 0) throw new Error("line chart has no plottable values");

  let yMin: number, yMax: number, yOf: (v: number) => number, yTicks: number[];
  if (logY) {
    const eMin = Math.floor(Math.log10(opts.yMin ?? Math.min(...allY)));
    const eMax = Math.ceil(Math.log10(opts.yMax ?? Math.max(...allY)));
    yMin = eMin;
    yMax = eMax === eMin ? eMin + 1 : eMax;
    yOf = (v) => MT + PH - ((Math.log10(v) - yMin) / (yMax - yMin)) * PH;
    yTicks = decadeTicks(yMin, yMax);
  } else {
    const lo = opts.yMin ?? Math.min(...allY);
    const hi = opts.yMax ?? Math.max(...allY);
    const pad = (hi - lo || 1) * 0.06;
    yMin = lo - pad;
    yMax = hi + pad;
    yOf = (v) => MT + PH - ((v - yMin) / (yMax - yMin)) * PH;
    yTicks = niceTicks(yMin, yMax);
  }
  const xOf = (v: number) => ML + ((v - xMin) / (xMax - xMin || 1)) * PW;

  let s = openSvg(opts.title);
  s += drawFrame({ xOf, yOf, yTicks, xTicks: niceTicks(xMin, xMax, 7) }, opts.xLabel, opts.yLabel, logY);
  for (const sr of series) {
    for (const points of polylineSegments(sr.x, sr.y, xOf, yOf, plottable)) {
      s += `<polyline fill="none" stroke="${sr.color}" stroke-width="${sr.width ?? 1.4}"${sr.dash ? ` stroke-dasharray="${sr.dash}"` : ""} points="${points}"/>\n`;
    }
  }
  s += drawLegend(series);
  s += "</svg>\n";
  return s;
}

export function barChart(opts: BarChartOpts): string {
  const { xs, counts } = opts;
  if (xs.length !== counts.length || xs.length === 0) {
    throw new Error("bar chart needs matching non-empty bins and counts");
  }
  const positives = counts.filter((c) => c > 0);
  if (positives.length === 0) throw new Error("bar chart has no occupied bins");
  const occupied = xs.filter((_, i) => counts[i] > 0);
  const xMin = Math.min(...occupied) - 1;
  const xMax = Math.max(...occupied) + 1;
  // log-y floor half a decade below the smallest occupied bin
  const eMin = Math.floor(Math.log10(Math.min(...positives))) - 0.5;
  const eMax = Math.ceil(Math.log10(Math.max(...positives, ...(opts.overlay?.y ?? []))));
  const yOf = (v: number) => MT + PH - ((Math.log10(v) - eMin) / (eMax - eMin)) * PH;
  const xOf = (v: number) => ML + ((v - xMin) / (xMax - xMin)) * PW;
  const barWidth = Math.min(22, (PW / (xMax - xMin)) * 0.8);

  let s = openSvg(opts.title);
  const xTicks = niceTicks(xMin, xMax, 8).filter((v) => Number.isInteger(v));
  s += drawFrame({ xOf, yOf, yTicks: decadeTicks(eMin, eMax), xTicks }, opts.xLabel, opts.yLabel, true);
  for (let i = 0; i < xs.length; i++) {
    if (counts[i] <= 0) continue;
    const x = xOf(xs[i]) - barWidth / 2;
    const y = yOf(counts[i]);
    s += `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${barWidth.toFixed(2)}" height="${(MT + PH - y).toFixed(2)}" fill="#7da7d9" stroke="#44699d" stroke-width="0.6"/>\n`;
  }
  const legend: { label: string; color: string; dash?: string }[] = [
    { label: "trajectories", color: "#7da7d9" },
  ];
  if (opts.overlay) {
    const o = opts.overlay;
    const segs = polylineSegments(o.x, o.y, xOf, yOf, (v) => Number.isFinite(v) && v > 0);
    for (const points of segs) {
      s += `<polyline fill="none" stroke="${o.color}" stroke-width="${o.width ?? 1.8}"${o.dash ? ` stroke-dasharray="${o.dash}"` : ""} points="${points}"/>\n`;
    }
    legend.push({ label: o.label, color: o.color, dash: o.dash });
  }
  s += drawLegend(legend);
  if (opts.caption) {
    s += `<text x="${ML + 6}" y="${MT + 14}" font-size="10" fill="#555">${esc(opts.caption)}</text>\n`;
  }
  s += "</svg>\n";
  return s;
}
