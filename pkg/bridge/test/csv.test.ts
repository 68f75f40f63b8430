import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { CACHE_HEADER, formatScoreCsv, writeScoreCsv } from "../src/csv";
import { ScoreRow } from "../src/types";

const ROWS: ScoreRow[] = [
  { pairId: "p1", side: "A", metricId: "pieapp", score: 1.25 },
  { pairId: "p1", side: "B", metricId: "pieapp", score: 0.30000000000000004 },
];

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "bridge-csv-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

describe("score cache CSV", () => {
  it("matches the cache grammar exactly", () => {
    const text = formatScoreCsv(ROWS);
    const lines = text.split("\n");
    expect(lines[0]).toBe(CACHE_HEADER);
    expect(lines.at(-1)).toBe("");
    const rowPattern = /^[^,\s]+,(A|B),[^,\s]+,-?\d+(\.\d+)?([eE][+-]?\d+)?$/;
    for (const line of lines.slice(1, -1)) {
      expect(line).toMatch(rowPattern);
    }
  });

  it("round-trips float values through the shortest decimal form", () => {
    const text = formatScoreCsv(ROWS);
    const value = text.split("\n")[2].split(",")[3];
    expect(Number(value)).toBe(0.30000000000000004);
  });

  it("writes atomically and deterministically", () => {
    const out1 = path.join(dir, "a", "scores.csv");
    const out2 = path.join(dir, "b", "scores.csv");
    writeScoreCsv(ROWS, out1);
    writeScoreCsv(ROWS, out2);
    expect(fs.readFileSync(out1)).toEqual(fs.readFileSync(out2));
    expect(fs.readdirSync(path.dirname(out1))).toEqual(["scores.csv"]);
  });
});
