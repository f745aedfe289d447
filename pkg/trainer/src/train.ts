import * as tf from "@tensorflow/tfjs";

import { TrainConfig } from "./configs.js";
import { EncodedExample, makeBatch, maxSeqLenFor } from "./data.js";
import { Transformer } from "./model.js";
import { Rng } from "./rng.js";

function setLearningRate(opt: tf.Optimizer, lr: number): void {
  // runtime property; tfjs reads it on every applyGradients call
  (opt as unknown as { learningRate: number }).learningRate = lr;
}

/**
 * Teacher-forced training loop: epochs of seeded shuffles, fixed-width
 * batches, Adam with linear warmup. Returns the per-step loss log.
 * Deterministic for a fixed config and model seed.
 */
export function trainModel(
  model: Transformer,
  examples: EncodedExample[],
  cfg: TrainConfig,
  onLog?: (step: number, loss: number) => void
): number[] {
  if (examples.length === 0) throw new Error("empty training set");
  const rng = new Rng(cfg.seed ^ 0x5eed5eed);
  const opt: tf.Optimizer = tf.train.adam(cfg.learningRate);
  const width = maxSeqLenFor(examples);
  const order = examples.map((_, i) => i);
  let cursor = order.length; // forces a shuffle before the first batch
  const losses: number[] = [];
  const varList = [...model.trainables().values()];

  for (let step = 0; step < cfg.nUpdates; step++) {
    const picked: EncodedExample[] = [];
    for (let i = 0; i < cfg.batchSize; i++) {
      if (cursor >= order.length) {
        rng.shuffle(order);
        cursor = 0;
      }
      picked.push(examples[order[cursor++]!]!);
    }
    const batch = makeBatch(picked, width);

    const warm = cfg.warmupSteps > 0 ? Math.min(1, (step + 1) / cfg.warmupSteps) : 1;
    setLearningRate(opt, cfg.learningRate * warm);

    const { value, grads } = tf.variableGrads(() => model.maskedLoss(batch), varList);
    opt.applyGradients(grads);
    const loss = value.dataSync()[0]!;
    value.dispose();
    tf.dispose(grads);

    losses.push(loss);
    if (onLog && (step % cfg.logEvery === 0 || step === cfg.nUpdates - 1)) {
      onLog(step, loss);
    }
  }
  opt.dispose();
  return losses;
}

/** Mean of trailing `window` losses, for smoothed-progress checks. */
export function smoothedLoss(losses: number[], window: number): number {
  const tail = losses.slice(-window);
  return tail.reduce((a, b) => a + b, 0) / tail.length;
}
