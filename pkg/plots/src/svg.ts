/**
 * Deterministic SVG assembly: fixed canvas, fixed decimal formatting,
 * no timestamps or generated ids, so identical inputs give identical
 * bytes.
 */

export const WIDTH = 720;
export const HEIGHT = 440;
export const MARGIN = { left: 64, right: 24, top: 36, bottom: 48 };

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f",
];

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

/** Tick label formatting: enough digits to tell ticks apart, no noise. */
export function tickLabel(x: number): string {
  if (x === 0) return "0";
  const ax = Math.abs(x);
  if (ax >= 1e4 || ax < 1e-3) return x.toExponential(1);
  return Number(x.toPrecision(4)).toString();
}

export interface Scale {
  (x: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (!(Number.isFinite(d0) && Number.isFinite(d1)) || d0 === d1) {
    d0 = d0 === d1 && Number.isFinite(d0) ? d0 - 1 : 0;
    d1 = d0 + (domain[0] === domain[1] ? 2 : 1);
  }
  const k = (range[1] - range[0]) / (d1 - d0);
  const scale = ((x: number) => range[0] + (x - d0) * k) as Scale;
  scale.domain = [d0, d1];
  return scale;
}

export function ticks(lo: number, hi: number, count = 6): number[] {
  if (!(Number.isFinite(lo) && Number.isFinite(hi)) || lo === hi) return [lo];
  const span = hi - lo;
  const step0 = span / Math.max(count - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (m * mag >= step0) { step = m * mag; break; }
  }
  const out: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
    out.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return out;
}

export function extent(values: number[], fallback: [number, number] = [0, 1]): [number, number] {
  const finite = values.filter(Number.isFinite);
  if (finite.length === 0) return fallback;
  return [Math.min(...finite), Math.max(...finite)];
}

export function padded(range: [number, number], frac = 0.05): [number, number] {
  const span = range[1] - range[0] || 1;
  return [range[0] - frac * span, range[1] + frac * span];
}

export class Svg {
  private parts: string[] = [];

  constructor(private title: string) {}

  raw(s: string): void {
    this.parts.push(s);
  }

  line(x1: number, y1: number, x2: number, y2: number, style: string): void {
    this.raw(`<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ${style}/>`);
  }

  polyline(points: Array<[number, number]>, style: string): void {
    if (points.length === 0) return;
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.raw(`<polyline points="${pts}" fill="none" ${style}/>`);
  }

  polygon(points: Array<[number, number]>, style: string): void {
    if (points.length === 0) return;
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.raw(`<polygon points="${pts}" ${style}/>`);
  }

  rect(x: number, y: number, w: number, h: number, style: string): void {
    this.raw(`<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(Math.max(w, 0))}" height="${fmt(Math.max(h, 0))}" ${style}/>`);
  }

  circle(cx: number, cy: number, r: number, style: string): void {
    this.raw(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" ${style}/>`);
  }

  text(x: number, y: number, s: string, style = ""): void {
    const esc = s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
    this.raw(`<text x="${fmt(x)}" y="${fmt(y)}" font-family="sans-serif" font-size="12" ${style}>${esc}</text>`);
  }

  axes(xs: Scale, ys: Scale, xLabel: string, yLabel: string): void {
    const x0 = MARGIN.left, x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom, y1 = MARGIN.top;
    const axisStyle = 'stroke="#333" stroke-width="1"';
    this.line(x0, y0, x1, y0, axisStyle);
    this.line(x0, y0, x0, y1, axisStyle);
    for (const t of ticks(xs.domain[0], xs.domain[1])) {
      const px = xs(t);
      if (px < x0 - 0.5 || px > x1 + 0.5) continue;
      this.line(px, y0, px, y0 + 4, axisStyle);
      this.text(px, y0 + 18, tickLabel(t), 'text-anchor="middle"');
    }
    for (const t of ticks(ys.domain[0], ys.domain[1])) {
      const py = ys(t);
      if (py > y0 + 0.5 || py < y1 - 0.5) continue;
      this.line(x0 - 4, py, x0, py, axisStyle);
      this.text(x0 - 8, py + 4, tickLabel(t), 'text-anchor="end"');
    }
    this.text((x0 + x1) / 2, HEIGHT - 10, xLabel, 'text-anchor="middle"');
    this.text(16, (y0 + y1) / 2, yLabel,
      `text-anchor="middle" transform="rotate(-90 16 ${fmt((y0 + y1) / 2)})"`);
    this.text((x0 + x1) / 2, 20, this.title, 'text-anchor="middle" font-weight="bold"');
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
      `<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
      ...this.parts,
      "</svg>",
      "",
    ].join("\n");
  }
}

export function plotArea(): { x: [number, number]; y: [number, number] } {
  return {
    x: [MARGIN.left, WIDTH - MARGIN.right],
    y: [HEIGHT - MARGIN.bottom, MARGIN.top],
  };
}
