/**
 * Least-squares tail fit for the hierarchy-order histogram.
 *
 * The simulator reports the final adaptive order of each trajectory; past
 * the distribution mode the counts fall off exponentially, so a straight
 * line through the log-counts recovers the decay rate.  The fit here is
 * recomputed from the raw histogram rather than copied from run_meta, so
 * the figure doubles as an independent check of the simulator's own fit.
 */

export interface LinearFit {
  slope: number;
  intercept: number;
  rSquared: number;
}

export function linearFit(x: number[], y: number[]): LinearFit {
  const n = x.length;
  if (n < 2 || n !== y.length) {
    throw new Error(`linear fit needs >= 2 paired points, got ${x.length}/${y.length}`);
  }
  let sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (let i = 0; i < n; i++) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const denom = n * sxx - sx * sx;
  if (denom === 0) {
    throw new Error("linear fit is degenerate: all x values identical");
  }
  const slope = (n * sxy - sx * sy) / denom;
  const intercept = (sy - slope * sx) / n;
  const yBar = sy / n;
  let ssRes = 0, ssTot = 0;
  for (let i = 0; i < n; i++) {
    const fit = slope * x[i] + intercept;
    ssRes += (y[i] - fit) ** 2;
    ssTot += (y[i] - yBar) ** 2;
  }
  return { slope, intercept, rSquared: ssTot > 0 ? 1 - ssRes / ssTot : 1 };
}

export interface TailFit {
  fitted: boolean;
  /** decay rate per order (positive for a falling tail) */
  rate: number;
  /** log-count at order zero along the fitted line */
  intercept: number;
  rSquared: number;
  /** most probable order (ties resolved to the lowest bin) */
  mode: number;
}

/**
 * Fit log(count) over the occupied bins from the mode upward.
 *
 * Mirrors the simulator's convention: bins with zero counts are skipped
 * (log undefined), and with fewer than two occupied bins at or above the
 * mode there is nothing to fit.
 */
export function tailFit(bins: number[], counts: number[]): TailFit {
  const occupied: number[] = [];
  for (let i = 0; i < counts.length; i++) {
    if (counts[i] > 0) occupied.push(i);
  }
  const empty: TailFit = { fitted: false, rate: NaN, intercept: NaN, rSquared: NaN, mode: 0 };
  if (occupied.length === 0) return empty;
  let mode = occupied[0];
  for (const i of occupied) {
    if (counts[i] > counts[mode]) mode = i;
  }
  const sel = occupied.filter((i) => i >= mode);
  if (sel.length < 2) return { ...empty, mode: bins[mode] };
  const x = sel.map((i) => bins[i]);
  const y = sel.map((i) => Math.log(counts[i]));
  const fit = linearFit(x, y);
  return {
    fitted: true,
    rate: -fit.slope,
    intercept: fit.intercept,
    rSquared: fit.rSquared,
    mode: bins[mode],
  };
}
