import { numeric, numericOrNone, Row } from "./csv.js";
import {
  esc, fmt, FRAME, linearScale, niceTicks, axisBottom, axisLeft,
  polylinePath, svgDocument,
} from "./svg.js";

export const SURFACE_COLUMNS =
  ["lambda_t", "delta_tau_star", "s_tilde"] as const;

const NONE_COLOR = "#d9d9d9";

interface Cell {
  lambda: number;
  delta: number;
  s: number | null;
}

/** Piecewise-linear color ramp, dark blue through green to yellow. */
const RAMP: Array<[number, number, number]> = [
  [68, 1, 84],
  [49, 104, 142],
  [53, 183, 121],
  [253, 231, 37],
];

function rampColor(t: number): string {
  const clamped = Math.min(1, Math.max(0, t));
  const pos = clamped * (RAMP.length - 1);
  const i = Math.min(RAMP.length - 2, Math.floor(pos));
  const f = pos - i;
  const mix = RAMP[i].map((c, k) => Math.round(c + f * (RAMP[i + 1][k] - c)));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}

function sortedUnique(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}

function parseCells(rows: Row[]): Cell[] {
  return rows.map((row) => ({
    lambda: numeric(row, "lambda_t"),
    delta: numeric(row, "delta_tau_star"),
    s: numericOrNone(row, "s_tilde"),
  }));
}

/** Similarity threshold over the (decay rate, time advantage) grid as a
 * heatmap; cells without a paying similarity get a flat marker color.
 * Degenerate grids with a single row or column fall back to a line. */
export function renderSurface(rows: Row[]): string {
  const cells = parseCells(rows);
  const lambdas = sortedUnique(cells.map((c) => c.lambda));
  const deltas = sortedUnique(cells.map((c) => c.delta));
  if (lambdas.length === 1 || deltas.length === 1) {
    return renderProfile(cells, lambdas.length === 1);
  }

  const defined = cells.filter((c) => c.s !== null).map((c) => c.s as number);
  const sMin = defined.length ? Math.min(...defined) : 0;
  const sMax = defined.length ? Math.max(...defined) : 1;
  const span = sMax - sMin || 1;

  const cw = (FRAME.right - FRAME.left) / lambdas.length;
  const ch = (FRAME.bottom - FRAME.top) / deltas.length;
  const col = new Map(lambdas.map((v, i) => [v, i]));
  const rowIx = new Map(deltas.map((v, i) => [v, i]));

  const rects = cells.map((cell) => {
    const i = col.get(cell.lambda)!;
    const j = rowIx.get(cell.delta)!;
    const px = FRAME.left + i * cw;
    // larger time advantages sit higher up
    const py = FRAME.bottom - (j + 1) * ch;
    const fill = cell.s === null
      ? NONE_COLOR : rampColor((cell.s - sMin) / span);
    return `<rect x="${px.toFixed(2)}" y="${py.toFixed(2)}" ` +
      `width="${cw.toFixed(2)}" height="${ch.toFixed(2)}" fill="${fill}"/>`;
  });

  const labels: string[] = [];
  const xStride = Math.max(1, Math.ceil(lambdas.length / 8));
  lambdas.forEach((v, i) => {
    if (i % xStride !== 0) {
      return;
    }
    const cx = (FRAME.left + (i + 0.5) * cw).toFixed(2);
    labels.push(`<text x="${cx}" y="${FRAME.bottom + 19}" ` +
      `text-anchor="middle" font-size="11">${esc(fmt(v))}</text>`);
  });
  const yStride = Math.max(1, Math.ceil(deltas.length / 8));
  deltas.forEach((v, j) => {
    if (j % yStride !== 0) {
      return;
    }
    const cy = (FRAME.bottom - (j + 0.5) * ch).toFixed(2);
    labels.push(`<text x="${FRAME.left - 8}" y="${cy}" text-anchor="end" ` +
      `dominant-baseline="middle" font-size="11">${esc(fmt(v))}</text>`);
  });
  const cx = (FRAME.left + FRAME.right) / 2;
  const cy = (FRAME.top + FRAME.bottom) / 2;
  labels.push(`<text x="${cx}" y="${FRAME.bottom + 40}" ` +
    `text-anchor="middle" font-size="13">decay rate</text>`);
  labels.push(`<text x="18" y="${cy}" text-anchor="middle" font-size="13" ` +
    `transform="rotate(-90 18 ${cy})">time advantage</text>`);

  const scale: string[] = [];
  const sx = FRAME.right + 28;
  if (defined.length) {
    const steps = 48;
    const sh = (FRAME.bottom - FRAME.top) / steps;
    for (let k = 0; k < steps; k++) {
      const py = (FRAME.bottom - (k + 1) * sh).toFixed(2);
      scale.push(`<rect x="${sx}" y="${py}" width="16" ` +
        `height="${(sh + 0.5).toFixed(2)}" fill="${rampColor(k / (steps - 1))}"/>`);
    }
    scale.push(`<text x="${sx + 22}" y="${FRAME.bottom}" font-size="11" ` +
      `dominant-baseline="middle">${esc(fmt(sMin))}</text>`);
    scale.push(`<text x="${sx + 22}" y="${FRAME.top}" font-size="11" ` +
      `dominant-baseline="middle">${esc(fmt(sMax))}</text>`);
    scale.push(`<text x="${sx + 8}" y="${FRAME.top - 14}" font-size="12" ` +
      `text-anchor="middle">threshold</text>`);
  }
  scale.push(`<rect x="${sx}" y="${FRAME.bottom + 14}" width="16" ` +
    `height="14" fill="${NONE_COLOR}"/>`);
  scale.push(`<text x="${sx + 22}" y="${FRAME.bottom + 25}" ` +
    `font-size="11">never pays</text>`);

  const body = [...rects, ...labels, ...scale].join("\n");
  return svgDocument("Similarity threshold", body);
}

/** 1-D fallback: threshold against the one axis that actually varies. */
function renderProfile(cells: Cell[], lambdaFixed: boolean): string {
  const coord = (c: Cell) => (lambdaFixed ? c.delta : c.lambda);
  const ordered = [...cells].sort((a, b) => coord(a) - coord(b));
  const xMin = coord(ordered[0]);
  const xMax = coord(ordered[ordered.length - 1]);
  const x = linearScale(xMin, xMax, FRAME.left, FRAME.right);
  const y = linearScale(0, 1, FRAME.bottom, FRAME.top);

  // consecutive defined cells form line segments; none cells leave gaps
  const segments: string[] = [];
  let run: Array<[number, number]> = [];
  for (const cell of ordered) {
    if (cell.s === null) {
      if (run.length > 1) {
        segments.push(polylinePath(run));
      }
      run = [];
      continue;
    }
    run.push([x(coord(cell)), y(cell.s)]);
  }
  if (run.length > 1) {
    segments.push(polylinePath(run));
  }
  const paths = segments.map((d) =>
    `<path d="${d}" fill="none" stroke="#4477aa" stroke-width="1.8"/>`);
  const dots = ordered
    .filter((c) => c.s !== null)
    .map((c) => `<circle cx="${x(coord(c)).toFixed(2)}" ` +
      `cy="${y(c.s as number).toFixed(2)}" r="3" fill="#4477aa"/>`);

  // mark the stretch where no similarity pays
  const noneMarks = ordered
    .filter((c) => c.s === null)
    .map((c) => {
      const px = (x(coord(c)) - 4).toFixed(2);
      return `<rect x="${px}" y="${FRAME.top}" width="8" ` +
        `height="${FRAME.bottom - FRAME.top}" fill="${NONE_COLOR}" ` +
        `fill-opacity="0.7"/>`;
    });

  const xLabel = lambdaFixed ? "time advantage" : "decay rate";
  const body = [
    axisLeft(y, [0, 0.25, 0.5, 0.75, 1], "threshold similarity"),
    axisBottom(x, niceTicks(xMin, xMax), xLabel),
    ...noneMarks,
    ...paths,
    ...dots,
  ].join("\n");
  return svgDocument("Similarity threshold", body);
}
