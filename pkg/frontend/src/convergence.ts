import { Row } from "./csv.js";
import { DataError } from "./errors.js";
import { groupByArm } from "./series.js";
import {
  axisBottom, axisLeft, FRAME, legend, linearScale, logScale, logTicks,
  niceTicks, PALETTE, polylinePath, svgDocument,
} from "./svg.js";

export const CONVERGENCE_COLUMNS =
  ["arm", "fe", "best_mean", "best_median", "best_std"] as const;

export interface ConvergenceOptions {
  logY: boolean;
}

/** One mean best-so-far line per arm over the evaluation counter. */
export function renderConvergence(
  rows: Row[], options: ConvergenceOptions): string {
  const series = groupByArm(rows, ["best_mean"],
    ["best_median", "best_std"]);
  const allFe = series.flatMap((s) => s.fe);
  const allMeans = series.flatMap((s) => s.values[0]);
  const feMin = Math.min(...allFe);
  const feMax = Math.max(...allFe);
  let yMin = Math.min(...allMeans);
  let yMax = Math.max(...allMeans);

  const x = linearScale(feMin, feMax, FRAME.left, FRAME.right);
  let y;
  let yTicks;
  if (options.logY) {
    if (yMin <= 0) {
      throw new DataError(
        `log scale requires positive values; best_mean reaches ${yMin}`);
    }
    y = logScale(yMin, yMax, FRAME.bottom, FRAME.top);
    yTicks = logTicks(yMin, yMax);
  } else {
    const pad = (yMax - yMin || Math.abs(yMax) || 1) * 0.05;
    yMin -= pad;
    yMax += pad;
    y = linearScale(yMin, yMax, FRAME.bottom, FRAME.top);
    yTicks = niceTicks(yMin, yMax);
  }

  const lines = series.map((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const points = s.fe.map((fe, j): [number, number] =>
      [x(fe), y(s.values[0][j])]);
    return `<path d="${polylinePath(points)}" fill="none" ` +
      `stroke="${color}" stroke-width="1.8"/>`;
  });

  const body = [
    axisLeft(y, yTicks, options.logY
      ? "mean best value (log)" : "mean best value"),
    axisBottom(x, niceTicks(feMin, feMax), "evaluations"),
    ...lines,
    legend(series.map((s, i) => ({
      label: s.arm,
      color: PALETTE[i % PALETTE.length],
    }))),
  ].join("\n");
  return svgDocument("Convergence", body);
}
