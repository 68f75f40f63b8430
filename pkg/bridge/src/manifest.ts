import fs from "node:fs";
import path from "node:path";
import Papa from "papaparse";

import { BridgeError, PairEntry } from "./types";

const HEADER = ["pair_id", "ref_path", "a_path", "b_path", "p_a"];

/** Parse a pair manifest CSV; paths resolve relative to the manifest's directory. */
export function loadManifest(manifestPath: string): PairEntry[] {
  let text: string;
  try {
    text = fs.readFileSync(manifestPath, "utf8");
  } catch (err) {
    throw new BridgeError(`cannot read manifest ${manifestPath}: ${err}`);
  }
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new BridgeError(
      `manifest ${manifestPath} row ${(e.row ?? 0) + 1}: ${e.message}`
    );
  }
  const rows = parsed.data;
  if (rows.length === 0 || rows[0].join(",") !== HEADER.join(",")) {
    throw new BridgeError(
      `manifest ${manifestPath}: header must be '${HEADER.join(",")}'`
    );
  }
  const base = path.dirname(manifestPath);
  const seen = new Map<string, number>();
  const entries: PairEntry[] = [];
  rows.slice(1).forEach((row, idx) => {
    const rownum = idx + 2;
    if (row.length !== HEADER.length) {
      throw new BridgeError(
        `manifest ${manifestPath} row ${rownum}: expected ${HEADER.length} columns, got ${row.length}`
      );
    }
    const [pairId, refRaw, aRaw, bRaw, pARaw] = row;
    if (!pairId) {
      throw new BridgeError(`manifest ${manifestPath} row ${rownum}: empty pair_id`);
    }
    const dup = seen.get(pairId);
    if (dup !== undefined) {
      throw new BridgeError(
        `manifest ${manifestPath} row ${rownum}: duplicate pair_id '${pairId}' (first seen on row ${dup})`
      );
    }
    seen.set(pairId, rownum);
    const pA = Number(pARaw);
    if (!Number.isFinite(pA) || pA < 0 || pA > 1) {
      throw new BridgeError(
        `manifest ${manifestPath} row ${rownum}: p_a '${pARaw}' outside [0, 1]`
      );
    }
    entries.push({
      pairId,
      refPath: path.resolve(base, refRaw),
      aPath: path.resolve(base, aRaw),
      bPath: path.resolve(base, bRaw),
      pA,
    });
  });
  return entries;
}
