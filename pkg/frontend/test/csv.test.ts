import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { numberColumn, readCsv, rows } from "../src/csv.js";

function tempCsv(content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "csv-"));
  const path = join(dir, "t.csv");
  writeFileSync(path, content);
  return path;
}

describe("readCsv", () => {
  it("parses rows under a validated header", () => {
    const path = tempCsv("a,b\n1,2\n3,4\n");
    const table = readCsv(path, ["a", "b"]);
    expect(table.rows).toEqual([["1", "2"], ["3", "4"]]);
    expect(numberColumn(table, "b")).toEqual([2, 4]);
  });

  it("names every missing column", () => {
    const path = tempCsv("a,b\n1,2\n");
    expect(() => readCsv(path, ["a", "c", "d"])).toThrowError(/c, d/);
  });

  it("rejects ragged rows with a line number", () => {
    const path = tempCsv("a,b\n1,2\n3\n");
    expect(() => readCsv(path, ["a"])).toThrowError(/:3/);
  });

  it("treats empty fields as NaN numbers", () => {
    const path = tempCsv("a,b\n1,\n");
    const table = readCsv(path, ["a", "b"]);
    expect(rows(table)[0].num("b")).toBeNaN();
    expect(rows(table)[0].get("b")).toBe("");
  });
});
