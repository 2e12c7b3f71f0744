/**
 * One renderer per figure kind.  Each consumes documented artifact
 * columns and only displays them: no statistic is ever recomputed here.
 */

import { SchemaError, Table, numColumn, parseCsv, requireColumns, strColumn } from "./csv.js";
import { PALETTE, Svg, extent, linearScale, padded, plotArea } from "./svg.js";

export const FIGURE_KINDS = [
  "growth-curves",
  "deviation-decay",
  "bminus-intervals",
  "eigenfunction-profile",
  "moment-trace",
  "audit-summary",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface Input {
  path: string;
  text: string;
}

const SCHEMAS: Record<string, string[]> = {
  "growth-curves": ["window_a", "window_b", "E", "mean_log_norm", "stderr", "trials"],
  "deviation-decay": ["statistic", "n", "epsilon", "trials", "count", "p_hat", "wilson_lo", "wilson_hi"],
  "eigenfunction-profile": ["site", "psi", "log_abs_psi", "fit_line"],
  "moment-trace": ["label", "t", "m_q", "m_q_squared", "contaminated"],
  "audit-summary": ["site", "gamma_moment", "moment_ok", "truncated_variance", "variance_ok"],
};

function csvInput(kind: FigureKind, inputs: Input[]): Table {
  const expected = SCHEMAS[kind];
  const candidate = inputs.find((inp) => inp.path.endsWith(".csv"));
  if (!candidate) {
    throw new SchemaError(`${kind}: no CSV input given`);
  }
  const table = parseCsv(candidate.text);
  requireColumns(table, expected, candidate.path);
  return table;
}

function jsonInput(inputs: Input[]): unknown | undefined {
  const candidate = inputs.find((inp) => inp.path.endsWith(".json"));
  if (!candidate) return undefined;
  try {
    return JSON.parse(candidate.text);
  } catch (err) {
    throw new SchemaError(`${candidate.path}: invalid JSON (${(err as Error).message})`);
  }
}

function finitePairs(xs: number[], ys: number[]): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (let i = 0; i < xs.length; i++) {
    if (Number.isFinite(xs[i]) && Number.isFinite(ys[i])) out.push([xs[i], ys[i]]);
  }
  return out;
}

function groupBy<T>(keys: string[], make: (key: string) => T): Map<string, T> {
  const out = new Map<string, T>();
  for (const k of keys) {
    if (!out.has(k)) out.set(k, make(k));
  }
  return out;
}

/** L / length vs E per window, with +-stderr/length bands. */
function growthCurves(inputs: Input[]): string {
  const table = csvInput("growth-curves", inputs);
  const wa = numColumn(table, "window_a");
  const wb = numColumn(table, "window_b");
  const E = numColumn(table, "E");
  const mean = numColumn(table, "mean_log_norm");
  const err = numColumn(table, "stderr");
  const lengths = wa.map((a, i) => wb[i] - a + 1);
  const rate = mean.map((m, i) => m / lengths[i]);
  const band = err.map((e, i) => e / lengths[i]);

  const svg = new Svg("growth functions: L / length vs E");
  const area = plotArea();
  const xs = linearScale(padded(extent(E)), area.x);
  const ys = linearScale(padded(extent([...rate.map((r, i) => r - band[i]),
                                        ...rate.map((r, i) => r + band[i])])), area.y);
  const windows = [...new Set(lengths.map((n, i) => `${wa[i]}:${wb[i]}`))];
  windows.forEach((key, wi) => {
    const idx = lengths.map((_, i) => i).filter((i) => `${wa[i]}:${wb[i]}` === key);
    idx.sort((i, j) => E[i] - E[j]);
    const color = PALETTE[wi % PALETTE.length];
    const upper = idx.map((i) => [xs(E[i]), ys(rate[i] + band[i])] as [number, number]);
    const lower = idx.map((i) => [xs(E[i]), ys(rate[i] - band[i])] as [number, number]);
    svg.polygon([...upper, ...lower.reverse()], `fill="${color}" opacity="0.15" stroke="none"`);
    svg.polyline(idx.map((i) => [xs(E[i]), ys(rate[i])]), `stroke="${color}" stroke-width="1.5"`);
    svg.text(area.x[1] - 110, area.y[1] + 16 + 14 * wi,
      `length ${lengths[idx[0]] ?? "?"}`, `fill="${color}"`);
  });
  svg.axes(xs, ys, "E", "L / length");
  return svg.render();
}

/** log exceedance probability vs n per statistic, with the fitted lines. */
function deviationDecay(inputs: Input[]): string {
  const table = csvInput("deviation-decay", inputs);
  const stats = strColumn(table, "statistic");
  const n = numColumn(table, "n");
  const p = numColumn(table, "p_hat");
  const lo = numColumn(table, "wilson_lo");
  const hi = numColumn(table, "wilson_hi");
  const logp = p.map((x) => (x > 0 ? Math.log(x) : NaN));
  const logLo = lo.map((x) => (x > 0 ? Math.log(x) : NaN));
  const logHi = hi.map((x) => (x > 0 ? Math.log(x) : NaN));
  const fits = (jsonInput(inputs) ?? {}) as Record<
    string, { slope?: number | null; intercept?: number | null }>;

  const svg = new Svg("large-deviation decay: log p vs n");
  const area = plotArea();
  const xs = linearScale(padded(extent(n)), area.x);
  const ys = linearScale(padded(extent([...logp, ...logLo, ...logHi])), area.y);
  const names = [...new Set(stats)];
  names.forEach((name, si) => {
    const color = PALETTE[si % PALETTE.length];
    const idx = stats.map((_, i) => i).filter((i) => stats[i] === name);
    idx.sort((i, j) => n[i] - n[j]);
    for (const i of idx) {
      if (Number.isFinite(logLo[i]) && Number.isFinite(logHi[i])) {
        svg.line(xs(n[i]), ys(logLo[i]), xs(n[i]), ys(logHi[i]),
          `stroke="${color}" stroke-width="1" opacity="0.6"`);
      }
      if (Number.isFinite(logp[i])) {
        svg.circle(xs(n[i]), ys(logp[i]), 3, `fill="${color}" stroke="none"`);
      }
    }
    const fit = fits[name];
    if (fit && typeof fit.slope === "number" && typeof fit.intercept === "number") {
      const [n0, n1] = extent(idx.map((i) => n[i]));
      svg.polyline(
        [[xs(n0), ys(fit.intercept + fit.slope * n0)],
         [xs(n1), ys(fit.intercept + fit.slope * n1)]],
        `stroke="${color}" stroke-width="1" stroke-dasharray="5,3"`);
    }
    svg.text(area.x[1] - 110, area.y[1] + 16 + 14 * si, name, `fill="${color}"`);
  });
  svg.axes(xs, ys, "n", "log p");
  return svg.render();
}

interface ScanJson {
  window?: unknown;
  epsilon?: unknown;
  intervals?: Array<{ lo: number; hi: number; eigenvalue: number | null }>;
  eigenvalues_in_range?: number[];
}

/** Sub-deviation intervals and window eigenvalues on the energy axis. */
function bminusIntervals(inputs: Input[]): string {
  const data = jsonInput(inputs) as ScanJson | undefined;
  if (!data || !Array.isArray(data.intervals)) {
    throw new SchemaError("bminus-intervals: need a scan JSON with an 'intervals' array",
      "intervals");
  }
  const intervals = data.intervals;
  const eigs = Array.isArray(data.eigenvalues_in_range) ? data.eigenvalues_in_range : [];
  const svg = new Svg("sub-deviation set: intervals about eigenvalues");
  const area = plotArea();
  const values = [...eigs, ...intervals.flatMap((iv) => [iv.lo, iv.hi])];
  const xs = linearScale(padded(extent(values)), area.x);
  const yMid = (area.y[0] + area.y[1]) / 2;
  const ys = linearScale([0, 1], area.y);
  svg.line(area.x[0], yMid, area.x[1], yMid, 'stroke="#999" stroke-width="1"');
  for (const lam of eigs) {
    svg.line(xs(lam), yMid - 26, xs(lam), yMid + 26, 'stroke="#2ca02c" stroke-width="1"');
  }
  intervals.forEach((iv) => {
    // widths are often below pixel resolution; give each a visible floor
    const x0 = xs(iv.lo), x1 = xs(iv.hi);
    const w = Math.max(x1 - x0, 2);
    svg.rect(x0 - (w - (x1 - x0)) / 2, yMid - 9, w, 18,
      'fill="#d62728" opacity="0.7" stroke="none"');
  });
  svg.text(area.x[0], area.y[1] + 16,
    `${intervals.length} intervals, ${eigs.length} eigenvalues in range`);
  svg.axes(xs, ys, "E", "");
  return svg.render();
}

/** log |psi| against the site index, with the fitted decay line. */
function eigenfunctionProfile(inputs: Input[]): string {
  const table = csvInput("eigenfunction-profile", inputs);
  const site = numColumn(table, "site");
  const logAbs = numColumn(table, "log_abs_psi");
  const fitLine = numColumn(table, "fit_line");
  const svg = new Svg("eigenfunction profile: log |psi| vs site");
  const area = plotArea();
  const xs = linearScale(padded(extent(site)), area.x);
  const ys = linearScale(padded(extent([...logAbs, ...fitLine])), area.y);
  svg.polyline(finitePairs(site.map(xs), logAbs.map(ys)),
    `stroke="${PALETTE[0]}" stroke-width="1"`);
  svg.polyline(finitePairs(site.map(xs), fitLine.map(ys)),
    `stroke="${PALETTE[1]}" stroke-width="1.5" stroke-dasharray="6,3"`);
  svg.text(area.x[1] - 130, area.y[1] + 16, "log |psi|", `fill="${PALETTE[0]}"`);
  svg.text(area.x[1] - 130, area.y[1] + 30, "fitted decay", `fill="${PALETTE[1]}"`);
  svg.axes(xs, ys, "site", "log |psi|");
  return svg.render();
}

/** M_q against t per labeled run, contaminated times shaded. */
function momentTrace(inputs: Input[]): string {
  const table = csvInput("moment-trace", inputs);
  const labels = strColumn(table, "label");
  const t = numColumn(table, "t");
  const mq = numColumn(table, "m_q");
  const contaminated = numColumn(table, "contaminated");
  const logm = mq.map((x) => (x > 0 ? Math.log10(x) : NaN));
  const svg = new Svg("moment trace: log10 M_q vs t");
  const area = plotArea();
  const xs = linearScale(padded(extent(t)), area.x);
  const ys = linearScale(padded(extent(logm)), area.y);
  // contamination shading from any labeled run, behind the curves
  const names = [...new Set(labels)];
  const shadeStep = names.length
    ? (extent(t)[1] - extent(t)[0]) / Math.max(t.length / names.length - 1, 1)
    : 0;
  for (let i = 0; i < t.length; i++) {
    if (contaminated[i] === 1) {
      svg.rect(xs(t[i] - shadeStep / 2), area.y[1], xs(t[i] + shadeStep / 2) - xs(t[i] - shadeStep / 2),
        area.y[0] - area.y[1], 'fill="#fdd" stroke="none"');
    }
  }
  names.forEach((name, si) => {
    const color = PALETTE[si % PALETTE.length];
    const idx = labels.map((_, i) => i).filter((i) => labels[i] === name);
    idx.sort((i, j) => t[i] - t[j]);
    svg.polyline(finitePairs(idx.map((i) => xs(t[i])), idx.map((i) => ys(logm[i]))),
      `stroke="${color}" stroke-width="1.5"`);
    svg.text(area.x[1] - 130, area.y[1] + 16 + 14 * si, name, `fill="${color}"`);
  });
  svg.axes(xs, ys, "t", "log10 M_q");
  return svg.render();
}

/** Pass/fail strip per audited site, one row per certificate. */
function auditSummary(inputs: Input[]): string {
  const table = csvInput("audit-summary", inputs);
  const site = numColumn(table, "site");
  const momentOk = numColumn(table, "moment_ok");
  const varianceOk = numColumn(table, "variance_ok");
  const svg = new Svg("assumption audit: pass/fail per site");
  const area = plotArea();
  const xs = linearScale(padded(extent(site), 0.02), area.x);
  const ys = linearScale([0, 1], area.y);
  const cell = site.length > 1
    ? (area.x[1] - area.x[0]) / site.length
    : (area.x[1] - area.x[0]);
  const rows: Array<[string, number[], number]> = [
    ["moment bound", momentOk, area.y[1] + 60],
    ["variance floor", varianceOk, area.y[1] + 140],
  ];
  for (const [label, flags, y0] of rows) {
    svg.text(area.x[0], y0 - 8, label);
    for (let i = 0; i < site.length; i++) {
      const color = flags[i] === 1 ? "#2ca02c" : "#d62728";
      svg.rect(xs(site[i]) - cell / 2, y0, cell, 48, `fill="${color}" stroke="none"`);
    }
  }
  svg.axes(xs, ys, "site", "");
  return svg.render();
}

export function render(kind: FigureKind, inputs: Input[]): string {
  switch (kind) {
    case "growth-curves": return growthCurves(inputs);
    case "deviation-decay": return deviationDecay(inputs);
    case "bminus-intervals": return bminusIntervals(inputs);
    case "eigenfunction-profile": return eigenfunctionProfile(inputs);
    case "moment-trace": return momentTrace(inputs);
    case "audit-summary": return auditSummary(inputs);
  }
}
