/**
 * Minimal CSV reader for the experiment artifacts.
 *
 * The artifacts are plain comma-separated tables with a fixed header,
 * no quoting, and 17-significant-digit floats; non-finite values appear
 * as "inf", "-inf", and "nan".
 */

export class SchemaError extends Error {
  constructor(message: string, public readonly column?: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty file: expected at least a header row");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  return { header, rows };
}

/** Validate the exact header; names the first offending column. */
export function requireColumns(table: Table, expected: string[], file: string): void {
  for (let i = 0; i < expected.length; i++) {
    if (i >= table.header.length) {
      throw new SchemaError(
        `${file}: missing column '${expected[i]}' (position ${i + 1})`,
        expected[i],
      );
    }
    if (table.header[i] !== expected[i]) {
      throw new SchemaError(
        `${file}: expected column '${expected[i]}' at position ${i + 1}, found '${table.header[i]}'`,
        expected[i],
      );
    }
  }
  if (table.header.length > expected.length) {
    const extra = table.header[expected.length];
    throw new SchemaError(`${file}: unexpected extra column '${extra}'`, extra);
  }
}

function parseNumber(token: string): number {
  if (token === "inf") return Infinity;
  if (token === "-inf") return -Infinity;
  if (token === "nan") return NaN;
  return Number(token);
}

export function numColumn(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing column '${name}'`, name);
  }
  return table.rows.map((row) => parseNumber(row[idx]));
}

export function strColumn(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing column '${name}'`, name);
  }
  return table.rows.map((row) => row[idx]);
}
