#!/usr/bin/env node
import path from "node:path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { runBridge } from "./bridge";
import { DEFAULT_CONFIG_PATH, loadConfigTable } from "./registry";
import { BridgeError } from "./types";

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .usage(
      "bridge --manifest M --metrics id,id --out scores.csv [--device d]\n\n" +
        "Runs pretrained deep IQA models over a pair manifest and writes a\n" +
        "stackiqa score-cache CSV (raw model outputs; polarity is applied by\n" +
        "the consumer's metric registry)."
    )
    .option("manifest", {
      type: "string",
      demandOption: true,
      describe: "pair manifest CSV",
    })
    .option("metrics", {
      type: "string",
      demandOption: true,
      describe: "comma-separated metric ids",
    })
    .option("out", {
      type: "string",
      demandOption: true,
      describe: "output score CSV path",
    })
    .option("model-root", {
      type: "string",
      default: path.resolve(__dirname, "..", "models"),
      describe: "directory holding <metric>/model.json checkpoints",
    })
    .option("config", {
      type: "string",
      default: DEFAULT_CONFIG_PATH,
      describe: "metric preprocessing config table (JSON)",
    })
    .option("device", {
      type: "string",
      choices: ["cpu", "wasm", "webgl"] as const,
      default: "cpu" as const,
      describe: "inference backend",
    })
    .option("batch", {
      type: "number",
      default: 8,
      describe: "inputs per inference batch",
    })
    .strict()
    .help()
    .parse();

  const metricIds = argv.metrics
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0);

  try {
    const { rows, failures } = await runBridge(
      {
        manifestPath: argv.manifest,
        metricIds,
        outPath: argv.out,
        modelRoot: argv["model-root"],
        device: argv.device,
        batchSize: Math.max(1, argv.batch),
      },
      loadConfigTable(argv.config)
    );
    for (const f of failures) {
      console.error(
        `bridge: FAILED (${f.pairId}, ${f.side}, ${f.metricId}): ${f.message}`
      );
    }
    console.log(
      `bridge: wrote ${rows.length} rows to ${argv.out}` +
        (failures.length ? `, ${failures.length} failures` : "")
    );
    return failures.length > 0 ? 1 : 0;
  } catch (err) {
    if (err instanceof BridgeError) {
      console.error(`bridge: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

main().then(
  (code) => {
    process.exitCode = code;
  },
  (err) => {
    console.error(err);
    process.exitCode = 3;
  }
);
