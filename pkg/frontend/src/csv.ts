import { readFileSync } from "fs";

export interface Table {
  path: string;
  columns: string[];
  rows: string[][];
}

/** Read a CSV, failing fast when required columns are missing. */
export function readCsv(path: string, required: string[]): Table {
  const text = readFileSync(path, "utf-8");
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error(`${path}: empty file, expected header ${required.join(",")}`);
  }
  const columns = lines[0].split(",");
  const missing = required.filter((name) => !columns.includes(name));
  if (missing.length > 0) {
    throw new Error(
      `${path}: missing column(s) ${missing.join(", ")}; found ${columns.join(", ")}`
    );
  }
  const rows = lines.slice(1).map((line, index) => {
    const fields = line.split(",");
    if (fields.length !== columns.length) {
      throw new Error(
        `${path}:${index + 2}: expected ${columns.length} fields, got ${fields.length}`
      );
    }
    return fields;
  });
  return { path, columns, rows };
}

export function column(table: Table, name: string): string[] {
  const index = table.columns.indexOf(name);
  if (index < 0) {
    throw new Error(`${table.path}: no column ${name}`);
  }
  return table.rows.map((row) => row[index]);
}

/** Numeric column; empty fields become NaN. */
export function numberColumn(table: Table, name: string): number[] {
  return column(table, name).map((field) => (field === "" ? NaN : Number(field)));
}

export interface Row {
  get(name: string): string;
  num(name: string): number;
}

export function rows(table: Table): Row[] {
  const index = new Map(table.columns.map((name, i) => [name, i]));
  return table.rows.map((fields) => ({
    get(name: string): string {
      const i = index.get(name);
      if (i === undefined) throw new Error(`${table.path}: no column ${name}`);
      return fields[i];
    },
    num(name: string): number {
      const value = this.get(name);
      return value === "" ? NaN : Number(value);
    },
  }));
}
