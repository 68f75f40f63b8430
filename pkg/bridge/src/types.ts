export type Side = "A" | "B";
export type MetricKind = "FR" | "NR";

export interface PairEntry {
  pairId: string;
  refPath: string;
  aPath: string;
  bPath: string;
  pA: number;
}

/** Decoded raster, channels-last RGB, values in [0, 255]. */
export interface DecodedImage {
  width: number;
  height: number;
  data: Float32Array; // length = height * width * 3
}

export interface BridgeJob {
  manifestPath: string;
  metricIds: string[];
  outPath: string;
  modelRoot: string;
  device: "cpu" | "wasm" | "webgl";
  batchSize: number;
}

export interface ScoreRow {
  pairId: string;
  side: Side;
  metricId: string;
  score: number;
}

export interface RowFailure {
  pairId: string;
  side: Side | "*";
  metricId: string;
  message: string;
}

export class BridgeError extends Error {}
