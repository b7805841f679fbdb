#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";
import { readTable, Row } from "./csv.js";
import { CONVERGENCE_COLUMNS, renderConvergence } from "./convergence.js";
import { SchemaError } from "./errors.js";
import { SURFACE_COLUMNS, renderSurface } from "./surface.js";
import { TRANSFER_RATE_COLUMNS, renderTransferRate } from "./transferRate.js";

export const USAGE =
  "usage: report <convergence|transfer-rate|s-tilde-surface> " +
  "--in <csv> --out <img> [--log-y] [--band 0.5]";

interface Job {
  columns: readonly string[];
  render: (rows: Row[], options: { logY: boolean; band: number }) => string;
}

const KINDS: Record<string, Job> = {
  "convergence": {
    columns: CONVERGENCE_COLUMNS,
    render: (rows, options) => renderConvergence(rows, options),
  },
  "transfer-rate": {
    columns: TRANSFER_RATE_COLUMNS,
    render: (rows, options) => renderTransferRate(rows, options),
  },
  "s-tilde-surface": {
    columns: SURFACE_COLUMNS,
    render: (rows) => renderSurface(rows),
  },
};

/** Run one rendering job; returns the process exit code.
 * 0: image written. 2: the input violates its schema. 1: anything else. */
export function main(argv: string[]): number {
  let positionals: string[];
  let values: { in?: string; out?: string; "log-y"?: boolean; band?: string };
  try {
    ({ positionals, values } = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        "in": { type: "string" },
        "out": { type: "string" },
        "log-y": { type: "boolean", default: false },
        "band": { type: "string", default: "0.5" },
      },
    }));
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    console.error(USAGE);
    return 1;
  }

  const kind = positionals[0];
  const job = kind === undefined ? undefined : KINDS[kind];
  if (positionals.length !== 1 || !job || !values.in || !values.out) {
    console.error(USAGE);
    return 1;
  }
  const band = Number(values.band);
  if (!Number.isFinite(band) || band < 0) {
    console.error(`--band must be a non-negative number, got "${values.band}"`);
    return 1;
  }

  try {
    const rows = readTable(values.in, job.columns);
    const image = job.render(rows, { logY: values["log-y"] ?? false, band });
    writeFileSync(values.out, image);
    return 0;
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return err instanceof SchemaError ? 2 : 1;
  }
}

const invokedDirectly = process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
