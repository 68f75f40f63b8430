export { runBridge, BridgeResult } from "./bridge";
export { formatScoreCsv, writeScoreCsv, CACHE_HEADER } from "./csv";
export { loadImage } from "./images";
export { loadManifest } from "./manifest";
export {
  ConfigTable,
  DEFAULT_CONFIG_PATH,
  MetricConfig,
  loadConfigTable,
  resolveMetric,
} from "./registry";
export {
  assembleInput,
  fileLoadHandler,
  loadMetricModel,
  predictScores,
  preprocess,
} from "./scorer";
export {
  BridgeError,
  BridgeJob,
  DecodedImage,
  PairEntry,
  RowFailure,
  ScoreRow,
  Side,
} from "./types";
