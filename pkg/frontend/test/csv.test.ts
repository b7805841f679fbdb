import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { numericOrNone, readTable } from "../src/csv.js";
import { EmptyInputError, SchemaError } from "../src/errors.js";

const dir = mkdtempSync(join(tmpdir(), "report-csv-"));

function file(name: string, content: string): string {
  const path = join(dir, name);
  writeFileSync(path, content);
  return path;
}

describe("readTable", () => {
  it("reads rows keyed by header", () => {
    const path = file("ok.csv", "arm,fe\nbo:plain,1\nbo:plain,2\n");
    const rows = readTable(path, ["arm", "fe"]);
    expect(rows).toHaveLength(2);
    expect(rows[0].arm).toBe("bo:plain");
  });

  it("names the missing column", () => {
    const path = file("missing.csv", "arm,fe\nbo:plain,1\n");
    expect(() => readTable(path, ["arm", "fe", "best_mean"]))
      .toThrowError(SchemaError);
    expect(() => readTable(path, ["arm", "fe", "best_mean"]))
      .toThrowError(/best_mean/);
  });

  it("rejects an empty file", () => {
    const path = file("empty.csv", "");
    expect(() => readTable(path, ["arm"])).toThrowError(EmptyInputError);
  });

  it("rejects a header with no data rows", () => {
    const path = file("header-only.csv", "arm,fe\n");
    expect(() => readTable(path, ["arm", "fe"]))
      .toThrowError(EmptyInputError);
  });
});

describe("numericOrNone", () => {
  it("maps the empty cell to null", () => {
    expect(numericOrNone({ s_tilde: "" }, "s_tilde")).toBeNull();
    expect(numericOrNone({ s_tilde: "0.25" }, "s_tilde")).toBe(0.25);
  });

  it("names the column on junk", () => {
    expect(() => numericOrNone({ s_tilde: "abc" }, "s_tilde"))
      .toThrowError(/s_tilde/);
  });
});
