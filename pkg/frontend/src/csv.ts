import { readFileSync } from "node:fs";
import Papa from "papaparse";
import { EmptyInputError, SchemaError } from "./errors.js";

export type Row = Record<string, string>;

/** Read a CSV file and check that every required column is present.
 * The file is only ever read, never written. */
export function readTable(path: string, columns: readonly string[]): Row[] {
  const text = readFileSync(path, "utf8");
  if (text.trim() === "") {
    throw new EmptyInputError(`${path} is empty`);
  }
  const parsed = Papa.parse<Row>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  for (const column of columns) {
    if (!fields.includes(column)) {
      throw new SchemaError(column,
        `missing from header [${fields.join(", ")}]`);
    }
  }
  if (parsed.data.length === 0) {
    throw new EmptyInputError(`${path} contains a header but no data rows`);
  }
  return parsed.data;
}

/** Parse one cell as a finite number. */
export function numeric(row: Row, column: string): number {
  const raw = (row[column] ?? "").trim();
  const value = Number(raw);
  if (raw === "" || !Number.isFinite(value)) {
    throw new SchemaError(column, `expected a finite number, got "${raw}"`);
  }
  return value;
}

/** Parse one cell as a finite number, with the empty cell meaning "none". */
export function numericOrNone(row: Row, column: string): number | null {
  const raw = (row[column] ?? "").trim();
  if (raw === "") {
    return null;
  }
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new SchemaError(column,
      `expected a finite number or an empty cell, got "${raw}"`);
  }
  return value;
}

/** Non-empty arm label. */
export function armLabel(row: Row): string {
  const arm = (row.arm ?? "").trim();
  if (arm === "") {
    throw new SchemaError("arm", "empty arm label");
  }
  return arm;
}
