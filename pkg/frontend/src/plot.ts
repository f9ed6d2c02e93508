/**
 * Grouped line figures from sweep CSVs.
 *
 * One series per (scheme, receiver, scenario) group; points are the rows
 * whose y column is non-empty, sorted by x. Output is a deterministic SVG
 * plus a companion point dump holding exactly the plotted subset of the
 * source CSV (same lines, same order).
 */

import { CsvRow, CsvTable, parseCsv, requireColumn } from "./csv.js";

export interface PlotSpec {
  csvText: string;
  xColumn: string;
  yColumn: string;
  logX: boolean;
  xLabel?: string;
  yLabel?: string;
  /** optional filter: keep only rows with this scenario code */
  scenario?: string;
}

export interface Series {
  key: string;
  points: { x: number; y: number }[];
  rows: CsvRow[];
}

export interface RenderResult {
  svg: string;
  dump: string;
  groups: string[];
}

// 6.4 x 4.8 inches at 150 dpi
const WIDTH = 960;
const HEIGHT = 720;
const MARGIN = { left: 90, right: 24, top: 24, bottom: 64 };

// Okabe-Ito colorblind-safe palette
const PALETTE = [
  "#0072B2",
  "#E69F00",
  "#009E73",
  "#CC79A7",
  "#56B4E9",
  "#D55E00",
  "#F0E442",
  "#000000",
];

const DASHES = ["", "8 4", "2 3", "8 4 2 4"];

export function groupKey(row: CsvRow): string {
  const f = row.fields;
  return `${f.scheme}/r${f.receiver}/s${f.scenario}`;
}

export function extractSeries(table: CsvTable, spec: PlotSpec): Series[] {
  requireColumn(table, spec.xColumn);
  requireColumn(table, spec.yColumn);
  const bySeries = new Map<string, { rows: CsvRow[] }>();
  for (const row of table.rows) {
    if (spec.scenario !== undefined && row.fields.scenario !== spec.scenario) {
      continue;
    }
    const y = row.fields[spec.yColumn];
    if (y === "") {
      continue; // infeasible/failed point: nothing to plot
    }
    const key = groupKey(row);
    if (!bySeries.has(key)) {
      bySeries.set(key, { rows: [] });
    }
    bySeries.get(key)!.rows.push(row);
  }
  if (bySeries.size === 0) {
    throw new Error("no plottable rows (empty CSV or all points missing)");
  }
  const series: Series[] = [];
  for (const [key, group] of [...bySeries.entries()].sort()) {
    const pts = group.rows.map((row) => {
      const x = Number(row.fields[spec.xColumn]);
      const y = Number(row.fields[spec.yColumn]);
      if (!Number.isFinite(x) || !Number.isFinite(y)) {
        throw new Error(`non-numeric point in group ${key}`);
      }
      return { row, x, y };
    });
    pts.sort((a, b) => a.x - b.x);
    series.push({
      key,
      points: pts.map(({ x, y }) => ({ x, y })),
      rows: pts.map(({ row }) => row),
    });
  }
  return series;
}

function niceTicks(lo: number, hi: number, target = 6): number[] {
  if (lo === hi) {
    return [lo];
  }
  const span = hi - lo;
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
    ticks.push(Math.abs(t) < 1e-12 * span ? 0 : t);
  }
  return ticks;
}

function decadeTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo) - 1e-12); Math.pow(10, e) <= hi * (1 + 1e-12); e++) {
    ticks.push(Math.pow(10, e));
  }
  return ticks.length ? ticks : [lo, hi];
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    return v.toExponential(0).replace("+", "");
  }
  return String(Number(v.toPrecision(6)));
}

export function renderSvg(series: Series[], spec: PlotSpec): string {
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  if (spec.logX && xs.some((x) => x <= 0)) {
    throw new Error("log x-axis needs strictly positive x values");
  }
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  let yLo = Math.min(...ys, 0);
  let yHi = Math.max(...ys);
  if (xLo === xHi) {
    xLo -= 0.5;
    xHi += 0.5;
  }
  if (yLo === yHi) {
    yHi = yLo + 1;
  }
  yHi += 0.05 * (yHi - yLo);

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number): number => {
    const t = spec.logX
      ? (Math.log10(x) - Math.log10(xLo)) / (Math.log10(xHi) - Math.log10(xLo))
      : (x - xLo) / (xHi - xLo);
    return MARGIN.left + t * plotW;
  };
  const sy = (y: number): number =>
    MARGIN.top + plotH - ((y - yLo) / (yHi - yLo)) * plotH;

  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="15">`,
  );
  out.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);

  const xTicks = spec.logX ? decadeTicks(xLo, xHi) : niceTicks(xLo, xHi);
  const yTicks = niceTicks(yLo, yHi);
  for (const t of xTicks) {
    const px = sx(t);
    out.push(
      `<line x1="${px.toFixed(2)}" y1="${MARGIN.top}" x2="${px.toFixed(2)}" ` +
        `y2="${MARGIN.top + plotH}" stroke="#dddddd"/>`,
    );
    out.push(
      `<text x="${px.toFixed(2)}" y="${MARGIN.top + plotH + 22}" ` +
        `text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of yTicks) {
    const py = sy(t);
    out.push(
      `<line x1="${MARGIN.left}" y1="${py.toFixed(2)}" ` +
        `x2="${MARGIN.left + plotW}" y2="${py.toFixed(2)}" stroke="#dddddd"/>`,
    );
    out.push(
      `<text x="${MARGIN.left - 8}" y="${(py + 5).toFixed(2)}" ` +
        `text-anchor="end">${fmt(t)}</text>`,
    );
  }
  out.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" ` +
      `height="${plotH}" fill="none" stroke="#444444"/>`,
  );
  out.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 16}" ` +
      `text-anchor="middle">${spec.xLabel ?? spec.xColumn}</text>`,
  );
  out.push(
    `<text x="22" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 22 ${MARGIN.top + plotH / 2})">` +
      `${spec.yLabel ?? spec.yColumn}</text>`,
  );

  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const dash = DASHES[Math.floor(i / PALETTE.length) % DASHES.length];
    const path = s.points
      .map((p) => `${sx(p.x).toFixed(2)},${sy(p.y).toFixed(2)}`)
      .join(" ");
    out.push(
      `<polyline class="series" points="${path}" fill="none" stroke="${color}" ` +
        `stroke-width="2"${dash ? ` stroke-dasharray="${dash}"` : ""}/>`,
    );
    for (const p of s.points) {
      out.push(
        `<circle cx="${sx(p.x).toFixed(2)}" cy="${sy(p.y).toFixed(2)}" ` +
          `r="3.5" fill="${color}"/>`,
      );
    }
  });

  // legend, one entry per group key
  const lx = MARGIN.left + 12;
  series.forEach((s, i) => {
    const ly = MARGIN.top + 14 + i * 22;
    const color = PALETTE[i % PALETTE.length];
    out.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 26}" y2="${ly}" ` +
        `stroke="${color}" stroke-width="2"/>`,
    );
    out.push(
      `<text class="legend" x="${lx + 32}" y="${ly + 5}">${s.key}</text>`,
    );
  });

  out.push("</svg>");
  return out.join("\n") + "\n";
}

export function render(spec: PlotSpec): RenderResult {
  const table = parseCsv(spec.csvText);
  const series = extractSeries(table, spec);
  const svg = renderSvg(series, spec);
  // the dump is exactly the plotted subset of the source CSV, in source
  // row order, so it can be diffed against the input directly
  const plotted = new Set<CsvRow>();
  for (const s of series) {
    for (const row of s.rows) {
      plotted.add(row);
    }
  }
  const lines = [table.headerLine];
  for (const row of table.rows) {
    if (plotted.has(row)) {
      lines.push(row.line);
    }
  }
  return {
    svg,
    dump: lines.join("\n") + "\n",
    groups: series.map((s) => s.key),
  };
}
