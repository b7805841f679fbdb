/** A CSV that does not match the documented schema: a missing column or a
 * cell that cannot be read as its column's type. Maps to exit code 2. */
export class SchemaError extends Error {
  readonly column: string;

  constructor(column: string, detail: string) {
    super(`schema error in column "${column}": ${detail}`);
    this.name = "SchemaError";
    this.column = column;
  }
}

/** An input file with no data rows. No output file is written. */
export class EmptyInputError extends Error {
  constructor(detail: string) {
    super(`empty input: ${detail}`);
    this.name = "EmptyInputError";
  }
}

/** Structurally valid CSV whose contents cannot be rendered, for example
 * arms with mismatched row counts or non-positive values on a log axis. */
export class DataError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = "DataError";
  }
}
