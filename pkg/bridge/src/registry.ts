import fs from "node:fs";
import path from "node:path";
import { z } from "zod";

import { BridgeError } from "./types";

const metricConfigSchema = z.object({
  kind: z.enum(["FR", "NR"]),
  // model input height/width the images are brought to
  inputSize: z.tuple([z.number().int().positive(), z.number().int().positive()]),
  // bilinear: resize the whole frame; center-crop: scale the short side, crop the middle
  resize: z.enum(["bilinear", "center-crop"]),
  // per-channel normalization applied after scaling pixels to [0, 1]
  normalize: z.object({
    mean: z.array(z.number()).length(3),
    std: z.array(z.number()).length(3),
  }),
  // model.json location relative to the model root
  model: z.string().min(1),
});

const configTableSchema = z.record(z.string(), metricConfigSchema);

export type MetricConfig = z.infer<typeof metricConfigSchema>;
export type ConfigTable = z.infer<typeof configTableSchema>;

export const DEFAULT_CONFIG_PATH = path.resolve(__dirname, "..", "models.json");

export function loadConfigTable(configPath: string = DEFAULT_CONFIG_PATH): ConfigTable {
  let raw: unknown;
  try {
    raw = JSON.parse(fs.readFileSync(configPath, "utf8"));
  } catch (err) {
    throw new BridgeError(`cannot read metric config table ${configPath}: ${err}`);
  }
  const result = configTableSchema.safeParse(raw);
  if (!result.success) {
    throw new BridgeError(
      `invalid metric config table ${configPath}: ${result.error.issues[0].message}`
    );
  }
  return result.data;
}

export function resolveMetric(
  table: ConfigTable,
  metricId: string
): MetricConfig {
  const cfg = table[metricId];
  if (!cfg) {
    throw new BridgeError(
      `metric id '${metricId}' is not in the config table (known: ${Object.keys(table).join(", ")})`
    );
  }
  return cfg;
}
