import fs from "node:fs";
import path from "node:path";
import * as tf from "@tensorflow/tfjs";

import { MetricConfig } from "./registry";
import { BridgeError, DecodedImage } from "./types";

/** Read a tfjs-layers model.json plus its weight shards from disk. */
export function fileLoadHandler(modelJsonPath: string): tf.io.IOHandler {
  return {
    load: async () => {
      const dir = path.dirname(modelJsonPath);
      const spec = JSON.parse(fs.readFileSync(modelJsonPath, "utf8"));
      const manifest = (spec.weightsManifest ?? []) as Array<{
        paths: string[];
        weights: tf.io.WeightsManifestEntry[];
      }>;
      const weightSpecs: tf.io.WeightsManifestEntry[] = [];
      const shards: Buffer[] = [];
      for (const group of manifest) {
        weightSpecs.push(...group.weights);
        for (const p of group.paths) {
          shards.push(fs.readFileSync(path.join(dir, p)));
        }
      }
      const merged = Buffer.concat(shards);
      const weightData = merged.buffer.slice(
        merged.byteOffset,
        merged.byteOffset + merged.byteLength
      );
      return {
        modelTopology: spec.modelTopology,
        format: spec.format,
        generatedBy: spec.generatedBy,
        convertedBy: spec.convertedBy,
        weightSpecs,
        weightData,
      };
    },
  };
}

export async function loadMetricModel(
  modelRoot: string,
  cfg: MetricConfig
): Promise<tf.LayersModel> {
  const modelJson = path.resolve(modelRoot, cfg.model);
  if (!fs.existsSync(modelJson)) {
    throw new BridgeError(
      `model weights not found at ${modelJson}; place the converted checkpoint under the model root`
    );
  }
  try {
    return await tf.loadLayersModel(fileLoadHandler(modelJson));
  } catch (err) {
    throw new BridgeError(`cannot load model ${modelJson}: ${err}`);
  }
}

/** Resize/crop + normalize one image to the metric's frozen input policy. */
export function preprocess(image: DecodedImage, cfg: MetricConfig): tf.Tensor3D {
  const [th, tw] = cfg.inputSize;
  return tf.tidy(() => {
    let t = tf
      .tensor3d(image.data, [image.height, image.width, 3])
      .div(255.0) as tf.Tensor3D;
    if (cfg.resize === "bilinear") {
      t = tf.image.resizeBilinear(t, [th, tw]);
    } else {
      // scale the short side to the target, then take the center window
      const scale = Math.max(th / image.height, tw / image.width);
      const rh = Math.max(th, Math.round(image.height * scale));
      const rw = Math.max(tw, Math.round(image.width * scale));
      t = tf.image.resizeBilinear(t, [rh, rw]);
      const top = Math.floor((rh - th) / 2);
      const left = Math.floor((rw - tw) / 2);
      t = tf.slice(t, [top, left, 0], [th, tw, 3]);
    }
    const mean = tf.tensor1d(cfg.normalize.mean);
    const std = tf.tensor1d(cfg.normalize.std);
    return t.sub(mean).div(std) as tf.Tensor3D;
  });
}

/**
 * Assemble one model input: NR metrics see the candidate alone, FR metrics
 * see reference and candidate stacked along channels (6-channel input).
 */
export function assembleInput(
  cfg: MetricConfig,
  candidate: DecodedImage,
  reference?: DecodedImage
): tf.Tensor3D {
  const cand = preprocess(candidate, cfg);
  if (cfg.kind === "NR") {
    return cand;
  }
  if (!reference) {
    throw new BridgeError("full-reference metric needs the reference image");
  }
  return tf.tidy(() => {
    const ref = preprocess(reference, cfg);
    const stacked = tf.concat([ref, cand], 2) as tf.Tensor3D;
    return stacked;
  });
}

/** Run one batch of assembled inputs; each input yields one scalar score. */
export async function predictScores(
  model: tf.LayersModel,
  inputs: tf.Tensor3D[]
): Promise<number[]> {
  const batch = tf.stack(inputs);
  try {
    const raw = model.predict(batch);
    const out = Array.isArray(raw) ? raw[0] : raw;
    // reduce any per-sample structure to one scalar per input
    const scores = tf.tidy(() =>
      out.reshape([inputs.length, -1]).mean(1)
    );
    const values = Array.from(await scores.data());
    if (Array.isArray(raw)) {
      raw.forEach((t) => t.dispose());
    } else {
      raw.dispose();
    }
    scores.dispose();
    return values;
  } finally {
    batch.dispose();
  }
}

export async function selectDevice(device: string): Promise<void> {
  const ok = await tf.setBackend(device);
  if (!ok) {
    throw new BridgeError(
      `backend '${device}' is not available in this runtime (registered: ${tf.engine().backendNames().join(", ")})`
    );
  }
  await tf.ready();
}
