// The four figure kinds, each a pure function of already-parsed inputs.

import { Table, Triplet, TrajectoryPoint, column } from './csv.js';
import { Figure, PALETTE, extent, linearScale, plotArea } from './svg.js';

/** Empirical CDF of a sample: sorted (value, fraction at-or-below) pairs. */
export function cdfPoints(values: number[]): Array<[number, number]> {
  const s = [...values].sort((a, b) => a - b);
  return s.map((v, k) => [v, (k + 1) / s.length]);
}

/**
 * Error CDFs from a per-step RPE table (columns rot_err, trans_err), or a
 * single curve from an exported CDF table (columns value,
 * cumulative_fraction).
 */
export function plotCdf(table: Table, path: string): string {
  const area = plotArea();
  let series: Array<{ label: string; pts: Array<[number, number]> }>;
  if (table.columns.includes('cumulative_fraction')) {
    const vi = column(table, 'value', path);
    const fi = column(table, 'cumulative_fraction', path);
    series = [{ label: 'error', pts: table.rows.map((r) => [r[vi], r[fi]]) }];
  } else {
    const ri = column(table, 'rot_err', path);
    const ti = column(table, 'trans_err', path);
    series = [
      { label: 'rotation', pts: cdfPoints(table.rows.map((r) => r[ri])) },
      { label: 'translation [m]', pts: cdfPoints(table.rows.map((r) => r[ti])) },
    ];
  }
  const allValues = series.flatMap((s) => s.pts.map((p) => p[0]));
  const fig = new Figure(
    linearScale([Math.min(0, extent(allValues)[0]), extent(allValues)[1]], area.x),
    linearScale([0, 1], area.y),
    'Per-step error CDF',
    'error',
    'cumulative fraction',
  );
  series.forEach((s, i) => {
    // anchor at (first value, 0) so the step up from zero is visible
    fig.polyline([[s.pts[0][0], 0], ...s.pts], PALETTE[i % PALETTE.length]);
  });
  fig.legend(series.map((s, i) => [s.label, PALETTE[i % PALETTE.length]]));
  return fig.render();
}

/** Scatter of nonzero positions, matrix orientation (row 0 at the top). */
export function plotSparsity(entries: Triplet[]): string {
  const area = plotArea();
  const maxI = Math.max(...entries.map((e) => e.i));
  const maxJ = Math.max(...entries.map((e) => e.j));
  const fig = new Figure(
    linearScale([0, maxJ], area.x),
    linearScale([maxI, 0], area.y),
    `Kernel sparsity (${entries.length} nonzeros)`,
    'column j',
    'row i',
  );
  fig.dots(entries.map((e) => [e.j, e.i]), PALETTE[0]);
  return fig.render();
}

/** Exact line-search gain G(t) against its 2nd- and 4th-order models. */
export function plotTaylor(table: Table, path: string): string {
  const ti = column(table, 't', path);
  const gi = column(table, 'G', path);
  const t2 = column(table, 'taylor2', path);
  const t4 = column(table, 'taylor4', path);
  for (let r = 0; r < table.rows.length; r++) {
    if (table.rows[r].some((v) => !Number.isFinite(v))) {
      throw new Error(`${path}: non-finite value in data row ${r + 1}`);
    }
  }
  const area = plotArea();
  const ys = table.rows.flatMap((r) => [r[gi], r[t2], r[t4]]);
  const fig = new Figure(
    linearScale(extent(table.rows.map((r) => r[ti])), area.x),
    linearScale(extent(ys), area.y),
    'Line-search gain vs polynomial models',
    'step length t',
    'G(t)',
  );
  const series: Array<[string, number]> = [
    ['exact G', gi],
    ['2nd order', t2],
    ['4th order', t4],
  ];
  series.forEach(([, col], i) => {
    fig.polyline(table.rows.map((r) => [r[ti], r[col]]), PALETTE[i]);
  });
  fig.legend(series.map(([label], i) => [label, PALETTE[i]]));
  return fig.render();
}

/** Top-down (x, y) view of a trajectory, optionally against ground truth. */
export function plotTrajectory(
  estimate: TrajectoryPoint[],
  truth: TrajectoryPoint[] | null,
): string {
  const area = plotArea();
  const all = truth ? estimate.concat(truth) : estimate;
  const [x0, x1] = extent(all.map((p) => p.x));
  const [y0, y1] = extent(all.map((p) => p.y));
  // equal aspect: widen the domains to the plot area's pixel ratio so a
  // meter covers the same number of pixels on both axes
  const span = Math.max(x1 - x0, y1 - y0, 1e-9) * 1.1;
  const aspect = (area.x[1] - area.x[0]) / Math.abs(area.y[1] - area.y[0]);
  const xSpan = aspect >= 1 ? span * aspect : span;
  const ySpan = aspect >= 1 ? span : span / aspect;
  const cx = (x0 + x1) / 2;
  const cy = (y0 + y1) / 2;
  const fig = new Figure(
    linearScale([cx - xSpan / 2, cx + xSpan / 2], area.x),
    linearScale([cy - ySpan / 2, cy + ySpan / 2], area.y),
    'Trajectory (top view)',
    'x [m]',
    'y [m]',
  );
  fig.polyline(estimate.map((p) => [p.x, p.y]), PALETTE[0]);
  const entries: Array<[string, string]> = [['estimate', PALETTE[0]]];
  if (truth) {
    fig.polyline(truth.map((p) => [p.x, p.y]), PALETTE[1]);
    entries.push(['ground truth', PALETTE[1]]);
  }
  fig.legend(entries);
  return fig.render();
}
