import { existsSync, mkdirSync, writeFileSync } from "fs";
import { join } from "path";

import { readCsv, rows, Row, Table } from "./csv.js";
import { extent, linearScale, logScale, Scale } from "./scales.js";
import { Panel, PALETTE, plotArea } from "./svg.js";

/** One replication-harness output directory, parsed and validated. */
export interface RunData {
  errorRates: Row[];
  stoppingTimes: Row[];
  decisions: Row[];
  gap: Row[];
  etaTrace: Row[];
  bounds: Row[];
}

const SCHEMAS: Array<[keyof RunData, string, string[]]> = [
  ["errorRates", "error_rates.csv",
   ["test", "n", "r", "delta", "epsilon", "empirical_error", "bound"]],
  ["stoppingTimes", "stopping_times.csv",
   ["test", "r", "delta", "epsilon", "chain_id", "decision", "stopping_time"]],
  ["decisions", "decisions.csv",
   ["test", "r", "delta", "epsilon", "chain_id", "decision", "stopping_time",
    "final_sum", "gamma_used"]],
  ["gap", "gap.csv", ["chain_id", "gamma_star_hat", "eta_final", "n_used"]],
  ["etaTrace", "eta_trace.csv", ["chain_id", "iteration", "eta", "gamma_min"]],
  ["bounds", "bounds.csv",
   ["r", "delta", "epsilon", "xi", "gamma", "n_fixed", "m", "n0",
    "stop_indiff", "stop_noindiff"]],
];

export function loadRun(dir: string): RunData {
  const data: Partial<RunData> = {};
  for (const [key, file, required] of SCHEMAS) {
    data[key] = rows(readCsv(join(dir, file), required));
  }
  return data as RunData;
}

const unique = (values: number[]): number[] =>
  [...new Set(values.filter((v) => !Number.isNaN(v)))].sort((a, b) => a - b);

const mean = (values: number[]): number =>
  values.reduce((a, b) => a + b, 0) / values.length;

/** Prefer a canonical value when the grid contains it. */
function pick(values: number[], preferred: number): number {
  const close = values.find((v) => Math.abs(v - preferred) < 1e-12);
  return close ?? values[0];
}

const near = (a: number, b: number): boolean => Math.abs(a - b) < 1e-12;

function groupMeanStops(
  records: Row[], test: string, filter: (row: Row) => boolean
): Map<number, Array<[number, number]>> {
  // r -> mean stopping time, only where every chain decided
  const byKey = new Map<string, { r: number; stops: number[]; undecided: number }>();
  for (const row of records) {
    if (row.get("test") !== test || !filter(row)) continue;
    const r = row.num("r");
    const key = String(r);
    const entry = byKey.get(key) ?? { r, stops: [], undecided: 0 };
    if (row.get("decision") === "Undecided") {
      entry.undecided += 1;
    } else {
      entry.stops.push(row.num("stopping_time"));
    }
    byKey.set(key, entry);
  }
  const points: Array<[number, number]> = [];
  for (const entry of byKey.values()) {
    if (entry.undecided === 0 && entry.stops.length > 0) {
      points.push([entry.r, mean(entry.stops)]);
    }
  }
  points.sort((a, b) => a[0] - b[0]);
  return new Map([[0, points]]);
}

function yLogDomain(values: number[], floor: number): [number, number] {
  const positive = values.filter((v) => v > floor);
  const hi = positive.length > 0 ? Math.max(...positive) : 1;
  return [floor, Math.max(hi, floor * 10)];
}

const ERROR_FLOOR = 1e-5;

/** Panel a: fixed-test empirical error vs n, dashed proven bounds. */
export function renderErrorRates(data: RunData): string {
  const panel = new Panel("Fixed-length test: empirical error rate vs sample size");
  const fixed = data.errorRates.filter((row) => row.get("test") === "fixed");
  if (fixed.length === 0) {
    panel.note("no fixed-test error rows");
    return panel.render();
  }
  const groups = new Map<string, Row[]>();
  for (const row of fixed) {
    const key = `r=${row.get("r")} d=${row.get("delta")}`;
    (groups.get(key) ?? groups.set(key, []).get(key)!).push(row);
  }
  // the informative curves are the ones where errors actually occur
  const scored = [...groups.entries()].map(([key, group]) => ({
    key,
    group,
    score: Math.max(...group.map((row) => row.num("empirical_error"))),
  }));
  scored.sort((a, b) => b.score - a.score || (a.key < b.key ? -1 : 1));
  const chosen = scored.slice(0, 4);

  const area = plotArea();
  const nValues = fixed.map((row) => row.num("n"));
  const x = logScale(extent(nValues), [area.left, area.right]);
  const y = logScale(
    yLogDomain(fixed.map((row) => row.num("bound")), ERROR_FLOOR),
    [area.bottom, area.top]
  );
  panel.axes(x, y, "sample size n", "error rate");
  const legend: Array<{ label: string; color: string; dashed?: boolean }> = [];
  chosen.forEach(({ key, group }, index) => {
    const color = PALETTE[index % PALETTE.length];
    const sorted = [...group].sort((a, b) => a.num("n") - b.num("n"));
    const bound: Array<[number, number]> = sorted.map((row) => [
      x(row.num("n")),
      y(Math.max(row.num("bound"), ERROR_FLOOR)),
    ]);
    panel.polyline(bound, color, true);
    const empirical: Array<[number, number]> = sorted.map((row) => [
      x(row.num("n")),
      y(Math.max(row.num("empirical_error"), ERROR_FLOOR)),
    ]);
    panel.polyline(empirical, color);
    for (const [px, py] of empirical) panel.circle(px, py, 2.5, color);
    legend.push({ label: key, color });
  });
  legend.push({ label: "dashed: proven bound", color: "#555", dashed: true });
  panel.legend(legend);
  return panel.render();
}

function renderMeanStops(
  data: RunData, test: string, sweep: "delta" | "epsilon", title: string
): string {
  const panel = new Panel(title);
  const records = data.stoppingTimes.filter((row) => row.get("test") === test);
  if (records.length === 0) {
    panel.note(`no ${test} rows`);
    return panel.render();
  }
  const epsValues = unique(records.map((row) => row.num("epsilon")));
  const deltaValues = unique(records.map((row) => row.num("delta")));
  const fixedEps = pick(epsValues, 0.01);
  const fixedDelta = deltaValues.length > 0 ? pick(deltaValues, 0.05) : NaN;
  const sweepValues = sweep === "delta" ? deltaValues : epsValues;

  const series: Array<{ label: string; points: Array<[number, number]>;
                        dashedLevel?: number }> = [];
  for (const value of sweepValues) {
    const filter = (row: Row): boolean =>
      sweep === "delta"
        ? near(row.num("delta"), value) && near(row.num("epsilon"), fixedEps)
        : near(row.num("epsilon"), value) &&
          (Number.isNaN(fixedDelta) || near(row.num("delta"), fixedDelta));
    const points = groupMeanStops(records, test, filter).get(0)!;
    // dashed reference: mean fixed-test sample size for this cell
    const boundRow = data.bounds.find((row) =>
      sweep === "delta"
        ? near(row.num("delta"), value) && near(row.num("epsilon"), fixedEps)
        : near(row.num("epsilon"), value) &&
          (Number.isNaN(fixedDelta) || near(row.num("delta"), fixedDelta))
    );
    series.push({
      label: `${sweep === "delta" ? "delta" : "eps"}=${value}`,
      points,
      dashedLevel: boundRow ? boundRow.num("n_fixed") : undefined,
    });
  }
  const allStops = series.flatMap((s) => s.points.map(([, stop]) => stop));
  const allLevels = series.flatMap((s) =>
    s.dashedLevel !== undefined && !Number.isNaN(s.dashedLevel) ? [s.dashedLevel] : []
  );
  if (allStops.length === 0 && allLevels.length === 0) {
    panel.note("no cell where every chain decided");
    return panel.render();
  }
  const area = plotArea();
  const x = linearScale([0, 1], [area.left, area.right]);
  const y = logScale(yLogDomain([...allStops, ...allLevels], 1), [area.bottom, area.top]);
  panel.axes(x, y, "threshold r", "mean stopping time");
  const legend: Array<{ label: string; color: string; dashed?: boolean }> = [];
  series.forEach((entry, index) => {
    const color = PALETTE[index % PALETTE.length];
    const path: Array<[number, number]> = entry.points.map(([r, stop]) => [
      x(r), y(Math.max(stop, 1)),
    ]);
    panel.polyline(path, color);
    for (const [px, py] of path) panel.circle(px, py, 2.5, color);
    if (entry.dashedLevel !== undefined && !Number.isNaN(entry.dashedLevel)) {
      const py = y(Math.max(entry.dashedLevel, 1));
      panel.line(area.left, py, area.right, py, color, true);
    }
    legend.push({ label: entry.label, color });
  });
  legend.push({ label: "dashed: fixed-test size", color: "#555", dashed: true });
  panel.legend(legend);
  return panel.render();
}

function renderStopCdf(data: RunData, test: string, title: string,
                       withFixedReference: boolean): string {
  const panel = new Panel(title);
  const records = data.stoppingTimes.filter((row) => row.get("test") === test);
  if (records.length === 0) {
    panel.note(`no ${test} rows`);
    return panel.render();
  }
  const epsValues = unique(records.map((row) => row.num("epsilon")));
  const deltaValues = unique(records.map((row) => row.num("delta")));
  const fixedEps = pick(epsValues, 0.01);
  const fixedDelta = deltaValues.length > 0 ? pick(deltaValues, 0.05) : NaN;
  const cell = records.filter((row) =>
    near(row.num("epsilon"), fixedEps) &&
    (Number.isNaN(fixedDelta) || near(row.num("delta"), fixedDelta))
  );
  const rValues = unique(cell.map((row) => row.num("r")));

  const curves: Array<{ label: string; stops: number[]; total: number;
                        dashed: boolean }> = [];
  for (const r of rValues) {
    const chainRows = cell.filter((row) => near(row.num("r"), r));
    const stops = chainRows
      .filter((row) => row.get("decision") !== "Undecided")
      .map((row) => row.num("stopping_time"))
      .sort((a, b) => a - b);
    curves.push({ label: `r=${r}`, stops, total: chainRows.length, dashed: false });
  }
  if (withFixedReference) {
    const reference = data.stoppingTimes.filter((row) =>
      row.get("test") === "fixed" &&
      near(row.num("epsilon"), fixedEps) &&
      (Number.isNaN(fixedDelta) || near(row.num("delta"), fixedDelta))
    );
    if (reference.length > 0) {
      const stops = reference.map((row) => row.num("stopping_time"))
        .sort((a, b) => a - b);
      curves.push({ label: "fixed-test size", stops, total: stops.length,
                    dashed: true });
    }
  }
  const allStops = curves.flatMap((curve) => curve.stops);
  if (allStops.length === 0) {
    panel.note("every chain was undecided");
    return panel.render();
  }
  const area = plotArea();
  const x = logScale(extent(allStops), [area.left, area.right]);
  const y = linearScale([0, 1], [area.bottom, area.top], 5);
  panel.axes(x, y, "stopping time", "empirical CDF");
  const legend: Array<{ label: string; color: string; dashed?: boolean }> = [];
  curves.forEach((curve, index) => {
    if (curve.stops.length === 0) return;
    const color = curve.dashed ? "#555" : PALETTE[index % PALETTE.length];
    const points: Array<[number, number]> = [];
    curve.stops.forEach((stop, k) => {
      const fraction = (k + 1) / curve.total;
      points.push([x(stop), y(k / curve.total)]);
      points.push([x(stop), y(fraction)]);
    });
    panel.polyline(points, color, curve.dashed);
    legend.push({ label: curve.label, color, dashed: curve.dashed });
  });
  panel.legend(legend);
  return panel.render();
}

/** Histogram of the per-chain gap estimates. */
export function renderGapHistogram(data: RunData): string {
  const panel = new Panel("Estimated absolute spectral gap across chains");
  const values = data.gap.map((row) => row.num("gamma_star_hat"))
    .filter((v) => !Number.isNaN(v));
  if (values.length === 0) {
    panel.note("no gap estimates");
    return panel.render();
  }
  const [lo, hi] = extent(values);
  const binCount = 10;
  const width = (hi - lo) / binCount || 1;
  const counts = new Array(binCount).fill(0);
  for (const v of values) {
    const bin = Math.min(binCount - 1, Math.floor((v - lo) / width));
    counts[bin] += 1;
  }
  const area = plotArea();
  const x = linearScale([lo, hi], [area.left, area.right]);
  const y = linearScale([0, Math.max(...counts)], [area.bottom, area.top], 5);
  panel.axes(x, y, "estimated gap", "chains");
  counts.forEach((count, bin) => {
    const x0 = x(lo + bin * width);
    const x1 = x(lo + (bin + 1) * width);
    panel.rect(x0, y(count), x1 - x0, area.bottom - y(count), "#69a3d0");
  });
  return panel.render();
}

/** Gap estimate per visited lag for the first chain. */
export function renderEtaTrace(data: RunData): string {
  const panel = new Panel("Gap estimate against autocovariance lag (first chain)");
  if (data.etaTrace.length === 0) {
    panel.note("no iteration trace");
    return panel.render();
  }
  const firstChain = Math.min(...data.etaTrace.map((row) => row.num("chain_id")));
  const trace = data.etaTrace
    .filter((row) => row.num("chain_id") === firstChain)
    .sort((a, b) => a.num("iteration") - b.num("iteration"));
  const lags = trace.map((row) => row.num("eta"));
  const gammas = trace.map((row) => row.num("gamma_min"));
  const area = plotArea();
  const [lagLo, lagHi] = extent(lags);
  const x = lagHi / Math.max(lagLo, 1) > 30
    ? logScale([Math.max(lagLo, 1), lagHi], [area.left, area.right])
    : linearScale([0, lagHi * 1.05], [area.left, area.right]);
  const y = linearScale([0, Math.max(...gammas) * 1.15 || 1],
                        [area.bottom, area.top], 5);
  panel.axes(x, y, "lag", "minimum implied gap");
  const points: Array<[number, number]> = trace.map((row) => [
    x(row.num("eta")), y(row.num("gamma_min")),
  ]);
  panel.polyline(points, PALETTE[0]);
  points.forEach(([px, py], index) => {
    panel.circle(px, py, 3, index === points.length - 1 ? PALETTE[1] : PALETTE[0]);
  });
  panel.text(points[points.length - 1][0] + 8, points[points.length - 1][1] - 6,
             `final lag ${lags[lags.length - 1]}`, { size: 11 });
  return panel.render();
}

export const FIGURES: Record<string, (data: RunData) => string> = {
  a: renderErrorRates,
  b: (data) => renderMeanStops(
    data, "seq", "delta",
    "Sequential test (indifference region): mean stopping time by delta"),
  c: (data) => renderMeanStops(
    data, "seq", "epsilon",
    "Sequential test (indifference region): mean stopping time by epsilon"),
  d: (data) => renderStopCdf(
    data, "seq", "Sequential test (indifference region): stopping-time CDF",
    true),
  e: (data) => renderMeanStops(
    data, "seq-ni", "epsilon",
    "Sequential test (no indifference region): mean stopping time by epsilon"),
  f: (data) => renderStopCdf(
    data, "seq-ni", "Sequential test (no indifference region): stopping-time CDF",
    false),
  "gap-histogram": renderGapHistogram,
  "eta-trace": renderEtaTrace,
};

export function renderAll(dir: string, only?: string[], figDir?: string): string[] {
  const ids = only ?? Object.keys(FIGURES);
  for (const id of ids) {
    if (!(id in FIGURES)) {
      throw new Error(`unknown figure id ${id}; known: ${Object.keys(FIGURES).join(", ")}`);
    }
  }
  const data = loadRun(dir);
  const target = figDir ?? dir;
  if (!existsSync(target)) mkdirSync(target, { recursive: true });
  const written: string[] = [];
  for (const id of ids) {
    const svg = FIGURES[id](data);
    const path = join(target, `fig_${id.replace(/-/g, "_")}.svg`);
    writeFileSync(path, svg, "utf-8");
    written.push(path);
  }
  return written;
}
