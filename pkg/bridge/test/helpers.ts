import fs from "node:fs";
import path from "node:path";
import * as tf from "@tensorflow/tfjs";
import { PNG } from "pngjs";

export function writePng(
  file: string,
  width: number,
  height: number,
  pixel: (x: number, y: number) => [number, number, number]
): void {
  const png = new PNG({ width, height });
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const i = (y * width + x) * 4;
      const [r, g, b] = pixel(x, y);
      png.data[i] = r;
      png.data[i + 1] = g;
      png.data[i + 2] = b;
      png.data[i + 3] = 255;
    }
  }
  fs.mkdirSync(path.dirname(file), { recursive: true });
  fs.writeFileSync(file, PNG.sync.write(png));
}

export function writePgm(file: string, rows: number[][]): void {
  const h = rows.length;
  const w = rows[0].length;
  const header = Buffer.from(`P5\n${w} ${h}\n255\n`, "ascii");
  const body = Buffer.from(rows.flat());
  fs.writeFileSync(file, Buffer.concat([header, body]));
}

export function writePpm(file: string, rows: number[][][]): void {
  const h = rows.length;
  const w = rows[0].length;
  const header = Buffer.from(`P6\n${w} ${h}\n255\n`, "ascii");
  const body = Buffer.from(rows.flat(2));
  fs.writeFileSync(file, Buffer.concat([header, body]));
}

export interface ToyPair {
  pairId: string;
  seed: number;
  pA: number;
}

/** Images + manifest for toy pairs: candidates are shifted copies of the reference. */
export function makeWorkspace(dir: string, pairs: ToyPair[]): string {
  fs.mkdirSync(dir, { recursive: true });
  const rows = ["pair_id,ref_path,a_path,b_path,p_a"];
  for (const p of pairs) {
    const base = (x: number, y: number): [number, number, number] => [
      (x * 7 + y * 13 + p.seed * 29) % 256,
      (x * 3 + y * 5 + p.seed * 17) % 256,
      (x * 11 + y * 2 + p.seed * 23) % 256,
    ];
    // candidates dominate the reference pointwise, B more than A
    const shifted = (x: number, y: number, shift: number) =>
      base(x, y).map((v) => Math.min(v + shift, 255)) as [number, number, number];
    writePng(path.join(dir, `${p.pairId}_o.png`), 48, 40, (x, y) => base(x, y));
    writePng(path.join(dir, `${p.pairId}_a.png`), 48, 40, (x, y) => shifted(x, y, 5));
    writePng(path.join(dir, `${p.pairId}_b.png`), 48, 40, (x, y) => shifted(x, y, 40));
    rows.push(
      `${p.pairId},${p.pairId}_o.png,${p.pairId}_a.png,${p.pairId}_b.png,${p.pA}`
    );
  }
  const manifest = path.join(dir, "pairs.csv");
  fs.writeFileSync(manifest, rows.join("\n") + "\n");
  return manifest;
}

function fileSaveHandler(dir: string): tf.io.IOHandler {
  return {
    save: async (artifacts) => {
      fs.mkdirSync(dir, { recursive: true });
      const weightData = tf.io.CompositeArrayBuffer.join(artifacts.weightData);
      fs.writeFileSync(path.join(dir, "weights.bin"), Buffer.from(weightData));
      const modelJson = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: artifacts.convertedBy,
        weightsManifest: [
          { paths: ["weights.bin"], weights: artifacts.weightSpecs },
        ],
      };
      fs.writeFileSync(path.join(dir, "model.json"), JSON.stringify(modelJson));
      return {
        modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: "JSON" },
      };
    },
  };
}

/**
 * Deterministic scorer checkpoint: global average pool then a fixed dense
 * kernel. FR variants (6 input channels) score mean(candidate) - mean(ref).
 */
export async function saveToyModel(
  dir: string,
  inputSize: [number, number],
  channels: 3 | 6
): Promise<void> {
  const model = tf.sequential();
  model.add(
    tf.layers.globalAveragePooling2d({
      inputShape: [inputSize[0], inputSize[1], channels],
    })
  );
  model.add(tf.layers.dense({ units: 1 }));
  const kernel =
    channels === 6
      ? [[-1 / 3], [-1 / 3], [-1 / 3], [1 / 3], [1 / 3], [1 / 3]]
      : [[1 / 3], [1 / 3], [1 / 3]];
  model.layers[1].setWeights([
    tf.tensor2d(kernel, [channels, 1]),
    tf.tensor1d([0.125]),
  ]);
  await model.save(fileSaveHandler(dir));
  model.dispose();
}

export const TOY_CONFIG = {
  pieapp: {
    kind: "FR" as const,
    inputSize: [32, 32] as [number, number],
    resize: "bilinear" as const,
    normalize: { mean: [0.5, 0.5, 0.5], std: [0.5, 0.5, 0.5] },
    model: "pieapp/model.json",
  },
  hyperiqa: {
    kind: "NR" as const,
    inputSize: [24, 24] as [number, number],
    resize: "center-crop" as const,
    normalize: { mean: [0.485, 0.456, 0.406], std: [0.229, 0.224, 0.225] },
    model: "hyperiqa/model.json",
  },
  topiq: {
    kind: "FR" as const,
    inputSize: [32, 32] as [number, number],
    resize: "bilinear" as const,
    normalize: { mean: [0.5, 0.5, 0.5], std: [0.5, 0.5, 0.5] },
    model: "topiq/model.json",
  },
};

export async function makeModelRoot(dir: string): Promise<string> {
  await saveToyModel(path.join(dir, "pieapp"), TOY_CONFIG.pieapp.inputSize, 6);
  await saveToyModel(
    path.join(dir, "hyperiqa"),
    TOY_CONFIG.hyperiqa.inputSize,
    3
  );
  return dir;
}
