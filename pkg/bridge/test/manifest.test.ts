import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { loadManifest } from "../src/manifest";
import { BridgeError } from "../src/types";

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "bridge-manifest-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function write(rows: string[], name = "pairs.csv"): string {
  const p = path.join(dir, name);
  fs.writeFileSync(
    p,
    ["pair_id,ref_path,a_path,b_path,p_a", ...rows].join("\n") + "\n"
  );
  return p;
}

describe("loadManifest", () => {
  it("parses rows and resolves paths against the manifest directory", () => {
    const p = write(["p001,refs/o.png,a.png,b.png,0.82"]);
    const entries = loadManifest(p);
    expect(entries).toHaveLength(1);
    expect(entries[0].pairId).toBe("p001");
    expect(entries[0].pA).toBeCloseTo(0.82, 12);
    expect(entries[0].refPath).toBe(path.join(dir, "refs", "o.png"));
  });

  it("rejects a wrong header", () => {
    const p = path.join(dir, "bad.csv");
    fs.writeFileSync(p, "id,r,a,b,p\nx,r,a,b,0.5\n");
    expect(() => loadManifest(p)).toThrow(/header/);
  });

  it("rejects duplicate pair ids with both row numbers", () => {
    const p = write(["p1,o,a,b,0.8", "p1,o,a,b,0.2"]);
    expect(() => loadManifest(p)).toThrow(/row 3.*row 2/);
  });

  it("rejects out-of-range p_a", () => {
    const p = write(["p1,o,a,b,1.5"]);
    expect(() => loadManifest(p)).toThrow(BridgeError);
  });

  it("rejects short rows", () => {
    const p = write(["p1,o,a,0.5"]);
    expect(() => loadManifest(p)).toThrow(/columns/);
  });

  it("rejects a missing file", () => {
    expect(() => loadManifest(path.join(dir, "nope.csv"))).toThrow(/read/);
  });
});
