// Minimal SVG scene building: fixed canvas, margins, linear scales, and the
// handful of elements the figures need. Coordinates are formatted to a fixed
// precision so identical inputs give byte-identical files.

export const WIDTH = 640;
export const HEIGHT = 440;
export const MARGIN = { left: 62, right: 16, top: 30, bottom: 46 };

export const PALETTE = ['#1965b0', '#dc050c', '#4eb265', '#f1932d'];

export function fmt(v: number): string {
  return v.toFixed(2).replace(/^-0\.00$/, '0.00');
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    // degenerate span: widen symmetrically so the value lands mid-range
    d0 -= 0.5;
    d1 += 0.5;
  }
  const k = (range[1] - range[0]) / (d1 - d0);
  const s = ((v: number) => range[0] + (v - d0) * k) as Scale;
  s.domain = [d0, d1];
  return s;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}

/** Round tick positions covering the domain, at most n of them. */
export function ticks(domain: [number, number], n = 6): number[] {
  const span = domain[1] - domain[0];
  if (span <= 0) return [domain[0]];
  const raw = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= n) ?? 10 * mag;
  const out: number[] = [];
  for (let v = Math.ceil(domain[0] / step) * step; v <= domain[1] + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

function tickLabel(v: number): string {
  if (v === 0) return '0';
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Math.round(v * 1e6) / 1e6);
}

export class Figure {
  private parts: string[] = [];

  constructor(
    public xScale: Scale,
    public yScale: Scale,
    title: string,
    xLabel: string,
    yLabel: string,
  ) {
    this.parts.push(
      `<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="${MARGIN.top - 10}" text-anchor="middle" font-size="14">${esc(title)}</text>`,
      `<text x="${(MARGIN.left + WIDTH - MARGIN.right) / 2}" y="${HEIGHT - 8}" text-anchor="middle" font-size="12">${esc(xLabel)}</text>`,
      `<text x="14" y="${(MARGIN.top + HEIGHT - MARGIN.bottom) / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 14 ${(MARGIN.top + HEIGHT - MARGIN.bottom) / 2})">${esc(yLabel)}</text>`,
    );
    this.axes();
  }

  private axes(): void {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    this.parts.push(
      `<path d="M ${x0} ${y1} L ${x0} ${y0} L ${x1} ${y0}" fill="none" stroke="#333" stroke-width="1"/>`,
    );
    for (const t of ticks(this.xScale.domain)) {
      const px = fmt(this.xScale(t));
      this.parts.push(
        `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="#333"/>`,
        `<text x="${px}" y="${y0 + 17}" text-anchor="middle" font-size="10">${tickLabel(t)}</text>`,
      );
    }
    for (const t of ticks(this.yScale.domain)) {
      const py = fmt(this.yScale(t));
      this.parts.push(
        `<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`,
        `<text x="${x0 - 7}" y="${py}" text-anchor="end" dominant-baseline="middle" font-size="10">${tickLabel(t)}</text>`,
      );
    }
  }

  polyline(points: Array<[number, number]>, color: string, cls = 'curve'): void {
    const pts = points
      .map(([x, y]) => `${fmt(this.xScale(x))},${fmt(this.yScale(y))}`)
      .join(' ');
    this.parts.push(
      `<polyline class="${cls}" points="${pts}" fill="none" stroke="${color}" stroke-width="1.5"/>`,
    );
  }

  dots(points: Array<[number, number]>, color: string, r = 1.6, cls = 'nz'): void {
    for (const [x, y] of points) {
      this.parts.push(
        `<circle class="${cls}" cx="${fmt(this.xScale(x))}" cy="${fmt(this.yScale(y))}" r="${r}" fill="${color}"/>`,
      );
    }
  }

  legend(entries: Array<[string, string]>): void {
    let y = MARGIN.top + 14;
    for (const [label, color] of entries) {
      const x = WIDTH - MARGIN.right - 150;
      this.parts.push(
        `<line x1="${x}" y1="${y - 4}" x2="${x + 22}" y2="${y - 4}" stroke="${color}" stroke-width="2"/>`,
        `<text x="${x + 28}" y="${y}" font-size="11">${esc(label)}</text>`,
      );
      y += 16;
    }
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">\n` +
      this.parts.join('\n') +
      '\n</svg>\n'
    );
  }
}

function esc(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

export function plotArea(): { x: [number, number]; y: [number, number] } {
  return {
    x: [MARGIN.left, WIDTH - MARGIN.right],
    y: [HEIGHT - MARGIN.bottom, MARGIN.top],
  };
}
