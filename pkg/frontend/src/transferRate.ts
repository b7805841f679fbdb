import { Row } from "./csv.js";
import { groupByArm } from "./series.js";
import {
  axisBottom, axisLeft, FRAME, legend, linearScale, niceTicks, PALETTE,
  polylinePath, svgDocument,
} from "./svg.js";

export const TRANSFER_RATE_COLUMNS =
  ["arm", "fe", "rate_mean", "rate_std"] as const;

export interface TransferRateOptions {
  /** Half-width of the shaded band in standard deviations. */
  band: number;
}

const clamp01 = (v: number) => Math.min(1, Math.max(0, v));

/** Transfer rate per checkpoint, one line per arm with a shaded
 * mean-plus-minus-band-std region; the y axis is pinned to [0, 1]. */
export function renderTransferRate(
  rows: Row[], options: TransferRateOptions): string {
  const series = groupByArm(rows, ["rate_mean", "rate_std"]);
  const allFe = series.flatMap((s) => s.fe);
  const feMin = Math.min(...allFe);
  const feMax = Math.max(...allFe);
  const x = linearScale(feMin, feMax, FRAME.left, FRAME.right);
  const y = linearScale(0, 1, FRAME.bottom, FRAME.top);

  const bands = series.map((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const upper = s.fe.map((fe, j): [number, number] =>
      [x(fe), y(clamp01(s.values[0][j] + options.band * s.values[1][j]))]);
    const lower = s.fe.map((fe, j): [number, number] =>
      [x(fe), y(clamp01(s.values[0][j] - options.band * s.values[1][j]))]);
    const outline = polylinePath([...upper, ...lower.reverse()]) + " Z";
    return `<path d="${outline}" fill="${color}" fill-opacity="0.18" ` +
      `stroke="none"/>`;
  });
  const lines = series.map((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const points = s.fe.map((fe, j): [number, number] =>
      [x(fe), y(clamp01(s.values[0][j]))]);
    return `<path d="${polylinePath(points)}" fill="none" ` +
      `stroke="${color}" stroke-width="1.8"/>`;
  });

  const body = [
    axisLeft(y, [0, 0.25, 0.5, 0.75, 1], "transfer rate"),
    axisBottom(x, niceTicks(feMin, feMax), "evaluations"),
    ...bands,
    ...lines,
    legend(series.map((s, i) => ({
      label: s.arm,
      color: PALETTE[i % PALETTE.length],
    }))),
  ].join("\n");
  return svgDocument("Transfer rate", body);
}
