import fs from "node:fs";
import path from "node:path";

import { ScoreRow } from "./types";

export const CACHE_HEADER = "pair_id,side,metric_id,score";

/** Serialize rows in the stackiqa score-cache format (deterministic bytes). */
export function formatScoreCsv(rows: ScoreRow[]): string {
  const lines = [CACHE_HEADER];
  for (const r of rows) {
    // String(number) is the shortest round-trip form, e.g. 'Infinity' never
    // appears here because model outputs are finite floats
    lines.push(`${r.pairId},${r.side},${r.metricId},${String(r.score)}`);
  }
  return lines.join("\n") + "\n";
}

/** Write the CSV atomically: temp file in the same directory, then rename. */
export function writeScoreCsv(rows: ScoreRow[], outPath: string): void {
  const dir = path.dirname(path.resolve(outPath));
  fs.mkdirSync(dir, { recursive: true });
  const tmp = path.join(dir, `.${path.basename(outPath)}.tmp`);
  fs.writeFileSync(tmp, formatScoreCsv(rows), "utf8");
  fs.renameSync(tmp, outPath);
}
