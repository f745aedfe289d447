export { loadModel, loadVerifier, saveModel, saveVerifier } from "./checkpoint.js";
export {
  modelConfigFor,
  SAMPLE_DEFAULTS,
  SIZE_LADDER,
  TRAIN_DEFAULTS,
} from "./configs.js";
export type { SampleConfig, TrainConfig } from "./configs.js";
export {
  encodeExamples,
  EOS,
  loadDataset,
  makeBatch,
  maxSeqLenFor,
  PAD,
  readJsonl,
  Vocab,
} from "./data.js";
export type { Batch, DatasetRecord, EncodedExample } from "./data.js";
export { SequenceTooLong, TrainerError, VocabMismatch } from "./errors.js";
export { Transformer } from "./model.js";
export type { ModelConfig, SizeTag } from "./model.js";
export { Rng } from "./rng.js";
export { generate, predictionsToJsonl, predictRecords } from "./sample.js";
export type { PredictionRecord, Scorer } from "./sample.js";
export { smoothedLoss, trainModel } from "./train.js";
export { corruptExample, trainVerifier, Verifier } from "./verifier.js";
export type { LabeledExample } from "./verifier.js";
