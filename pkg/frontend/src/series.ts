import { armLabel, numeric, Row } from "./csv.js";
import { DataError } from "./errors.js";

export interface ArmSeries {
  arm: string;
  fe: number[];
  /** One array per value column, in the order requested. */
  values: number[][];
}

/** Group rows by arm, keeping first-appearance order, and pull the given
 * numeric columns. Every declared numeric column is validated row by row,
 * consumed or not, so a corrupt file fails loudly. */
export function groupByArm(
  rows: Row[], valueColumns: readonly string[],
  validateOnly: readonly string[] = []): ArmSeries[] {
  const order: string[] = [];
  const byArm = new Map<string, ArmSeries>();
  for (const row of rows) {
    const arm = armLabel(row);
    let series = byArm.get(arm);
    if (!series) {
      series = { arm, fe: [], values: valueColumns.map(() => []) };
      byArm.set(arm, series);
      order.push(arm);
    }
    series.fe.push(numeric(row, "fe"));
    valueColumns.forEach((column, i) => {
      series!.values[i].push(numeric(row, column));
    });
    for (const column of validateOnly) {
      numeric(row, column);
    }
  }
  const grouped = order.map((arm) => byArm.get(arm)!);
  const counts = grouped.map((s) => s.fe.length);
  if (new Set(counts).size > 1) {
    const listing = grouped
      .map((s) => `${s.arm} (${s.fe.length} rows)`)
      .join(", ");
    throw new DataError(`arms have mismatched row counts: ${listing}`);
  }
  return grouped;
}
