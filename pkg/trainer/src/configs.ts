import { ModelConfig, SizeTag } from "./model.js";

/**
 * Width/depth ladder. The M row is the 4-layer reference shape; the
 * others scale it down and up so parameter counts grow strictly with
 * the tag.
 */
export const SIZE_LADDER: Record<SizeTag, { nLayers: number; modelWidth: number; nHeads: number }> = {
  S: { nLayers: 2, modelWidth: 64, nHeads: 2 },
  M: { nLayers: 4, modelWidth: 128, nHeads: 4 },
  L: { nLayers: 6, modelWidth: 256, nHeads: 8 },
  XL: { nLayers: 8, modelWidth: 384, nHeads: 8 },
};

export function modelConfigFor(
  sizeTag: SizeTag,
  vocabSize: number,
  maxSeqLen: number,
  seed: number
): ModelConfig {
  return { ...SIZE_LADDER[sizeTag], vocabSize, maxSeqLen, seed, sizeTag };
}

export interface TrainConfig {
  nUpdates: number;
  batchSize: number;
  learningRate: number;
  /** linear ramp from 0 to learningRate over this many updates */
  warmupSteps: number;
  seed: number;
  logEvery: number;
}

export const TRAIN_DEFAULTS: TrainConfig = {
  nUpdates: 20_000,
  batchSize: 256,
  learningRate: 3e-4,
  warmupSteps: 200,
  seed: 0,
  logEvery: 100,
};

export interface SampleConfig {
  mode: "greedy" | "temperature";
  temperature: number;
  nSamples: number;
  maxNewTokens?: number;
}

export const SAMPLE_DEFAULTS: SampleConfig = {
  mode: "temperature",
  temperature: 0.9,
  nSamples: 20,
};
