import { readFileSync } from "node:fs";
import Papa from "papaparse";

/** A parsed CSV: column names plus rows of numbers keyed by column. */
export interface Table {
  columns: string[];
  rows: Record<string, number>[];
}

export class CsvError extends Error {}

/** Parse a numeric CSV with a header row. Throws CsvError on empty or
 *  malformed input. */
export const parseCsv = (text: string): Table => {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new CsvError(`malformed CSV: ${parsed.errors[0].message}`);
  }
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0 || parsed.data.length === 0) {
    throw new CsvError("CSV has no data rows");
  }
  const rows = parsed.data.map((raw, i) => {
    const row: Record<string, number> = {};
    for (const col of columns) {
      const value = Number(raw[col]);
      if (!Number.isFinite(value)) {
        throw new CsvError(
          `non-numeric value ${JSON.stringify(raw[col])} at row ${i}, column ${col}`,
        );
      }
      row[col] = value;
    }
    return row;
  });
  return { columns, rows };
};

export const readCsv = (path: string): Table => parseCsv(readFileSync(path, "utf-8"));

/** Ensure every required column is present; names the missing ones. */
export const requireColumns = (table: Table, required: string[]): void => {
  const missing = required.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    throw new CsvError(
      `missing required column(s): ${missing.join(", ")} ` +
        `(found: ${table.columns.join(", ")})`,
    );
  }
};

/** Group rows by the integer value of a column, keys sorted ascending. */
export const groupBy = (
  table: Table,
  column: string,
): Map<number, Record<string, number>[]> => {
  const groups = new Map<number, Record<string, number>[]>();
  for (const row of table.rows) {
    const key = row[column];
    if (!groups.has(key)) groups.set(key, []);
    groups.get(key)!.push(row);
  }
  return new Map([...groups.entries()].sort((a, b) => a[0] - b[0]));
};
