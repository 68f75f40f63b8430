import * as tf from "@tensorflow/tfjs";

import { writeScoreCsv } from "./csv";
import { loadImage } from "./images";
import { loadManifest } from "./manifest";
import {
  ConfigTable,
  MetricConfig,
  loadConfigTable,
  resolveMetric,
} from "./registry";
import {
  assembleInput,
  loadMetricModel,
  predictScores,
  selectDevice,
} from "./scorer";
import {
  BridgeError,
  BridgeJob,
  DecodedImage,
  PairEntry,
  RowFailure,
  ScoreRow,
  Side,
} from "./types";

export interface BridgeResult {
  rows: ScoreRow[];
  failures: RowFailure[];
}

class ImageCache {
  private cache = new Map<string, DecodedImage | BridgeError>();

  get(file: string): DecodedImage {
    let hit = this.cache.get(file);
    if (hit === undefined) {
      try {
        hit = loadImage(file);
      } catch (err) {
        hit = err instanceof BridgeError ? err : new BridgeError(String(err));
      }
      this.cache.set(file, hit);
    }
    if (hit instanceof BridgeError) {
      throw hit;
    }
    return hit;
  }
}

interface Slot {
  pairId: string;
  side: Side;
  input: tf.Tensor3D;
}

async function scoreMetric(
  metricId: string,
  cfg: MetricConfig,
  model: tf.LayersModel,
  entries: PairEntry[],
  images: ImageCache,
  batchSize: number,
  rows: ScoreRow[],
  failures: RowFailure[]
): Promise<void> {
  let batch: Slot[] = [];

  const flush = async () => {
    if (batch.length === 0) return;
    const scores = await predictScores(
      model,
      batch.map((s) => s.input)
    );
    batch.forEach((slot, i) => {
      rows.push({
        pairId: slot.pairId,
        side: slot.side,
        metricId,
        score: scores[i],
      });
      slot.input.dispose();
    });
    batch = [];
  };

  for (const entry of entries) {
    for (const side of ["A", "B"] as Side[]) {
      const candidatePath = side === "A" ? entry.aPath : entry.bPath;
      try {
        const candidate = images.get(candidatePath);
        const reference =
          cfg.kind === "FR" ? images.get(entry.refPath) : undefined;
        batch.push({
          pairId: entry.pairId,
          side,
          input: assembleInput(cfg, candidate, reference),
        });
      } catch (err) {
        failures.push({
          pairId: entry.pairId,
          side,
          metricId,
          message: String(err instanceof Error ? err.message : err),
        });
        continue;
      }
      if (batch.length >= batchSize) {
        await flush();
      }
    }
  }
  await flush();
}

/** Score every (pair, side, metric); failures are recorded, not fatal. */
export async function runBridge(
  job: BridgeJob,
  configTable?: ConfigTable
): Promise<BridgeResult> {
  await selectDevice(job.device);
  if (job.metricIds.length === 0) {
    throw new BridgeError("no metric ids requested");
  }
  const table = configTable ?? loadConfigTable();
  const entries = loadManifest(job.manifestPath);
  const images = new ImageCache();
  const rows: ScoreRow[] = [];
  const failures: RowFailure[] = [];

  for (const metricId of job.metricIds) {
    let cfg: MetricConfig;
    let model: tf.LayersModel;
    try {
      cfg = resolveMetric(table, metricId);
      model = await loadMetricModel(job.modelRoot, cfg);
    } catch (err) {
      // the whole metric is unavailable: one failure per would-be row
      const message = String(err instanceof Error ? err.message : err);
      for (const entry of entries) {
        for (const side of ["A", "B"] as Side[]) {
          failures.push({ pairId: entry.pairId, side, metricId, message });
        }
      }
      continue;
    }
    try {
      await scoreMetric(
        metricId,
        cfg,
        model,
        entries,
        images,
        job.batchSize,
        rows,
        failures
      );
    } finally {
      model.dispose();
    }
  }
  writeScoreCsv(rows, job.outPath);
  return { rows, failures };
}
