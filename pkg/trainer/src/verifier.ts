import * as tf from "@tensorflow/tfjs";

import { TrainConfig } from "./configs.js";
import { EncodedExample, makeBatch, maxSeqLenFor, PAD } from "./data.js";
import { ModelConfig, Transformer } from "./model.js";
import { Rng } from "./rng.js";

let verifierCounter = 0;

/**
 * Scores a (prompt, candidate output) pair with a scalar in (0, 1):
 * the transformer's pooled final states through a sigmoid head. Scores
 * are always nonnegative, so they are safe for weighted voting.
 */
export class Verifier {
  readonly base: Transformer;
  readonly wscore: tf.Variable;
  readonly bscore: tf.Variable;

  constructor(cfg: ModelConfig) {
    this.base = new Transformer(cfg);
    const prefix = `v${verifierCounter++}`;
    this.wscore = tf.variable(
      tf.randomNormal([cfg.modelWidth, 1], 0, 0.02, "float32", cfg.seed * 31 + 5),
      true,
      `${prefix}/wscore`
    );
    this.bscore = tf.variable(tf.zeros([1]), true, `${prefix}/bscore`);
  }

  trainables(): Map<string, tf.Variable> {
    const map = new Map(this.base.trainables());
    map.set("wscore", this.wscore);
    map.set("bscore", this.bscore);
    return map;
  }

  /** Pre-sigmoid score per row; pooling ignores padding. */
  logit(tokens: tf.Tensor2D): tf.Tensor1D {
    const h = this.base.hidden(tokens);
    const notPad = tokens.notEqual(PAD).cast("float32").expandDims(-1);
    const pooled = tf.sum(h.mul(notPad), 1).div(tf.sum(notPad, 1).maximum(1));
    return tf.matMul(pooled, this.wscore).add(this.bscore).reshape([-1]) as tf.Tensor1D;
  }

  score(promptIds: number[], outputIds: number[]): number {
    return tf.tidy(() => {
      const ids = [...promptIds, ...outputIds];
      const tokens = tf.tensor2d([ids], [1, ids.length], "int32");
      return tf.sigmoid(this.logit(tokens)).dataSync()[0]!;
    });
  }

  dispose(): void {
    this.base.dispose();
    this.wscore.dispose();
    this.bscore.dispose();
  }
}

export interface LabeledExample {
  example: EncodedExample;
  label: number; // 1 correct, 0 incorrect
}

/** Binary cross-entropy training on labeled sequence pairs. */
export function trainVerifier(
  verifier: Verifier,
  data: LabeledExample[],
  cfg: TrainConfig,
  onLog?: (step: number, loss: number) => void
): number[] {
  if (data.length === 0) throw new Error("empty verifier training set");
  const rng = new Rng(cfg.seed ^ 0x7e217e21);
  const opt: tf.Optimizer = tf.train.adam(cfg.learningRate);
  const width = maxSeqLenFor(data.map((d) => d.example));
  const order = data.map((_, i) => i);
  let cursor = order.length;
  const losses: number[] = [];
  const varList = [...verifier.trainables().values()];

  for (let step = 0; step < cfg.nUpdates; step++) {
    const picked: LabeledExample[] = [];
    for (let i = 0; i < cfg.batchSize; i++) {
      if (cursor >= order.length) {
        rng.shuffle(order);
        cursor = 0;
      }
      picked.push(data[order[cursor++]!]!);
    }
    const batch = makeBatch(picked.map((d) => d.example), width);
    const labels = picked.map((d) => d.label);

    const { value, grads } = tf.variableGrads(() => {
      const B = batch.tokens.length;
      const T = batch.tokens[0]!.length;
      const tokens = tf.tensor2d(batch.tokens.flat(), [B, T], "int32");
      const logits = verifier.logit(tokens);
      const y = tf.tensor1d(labels);
      // softplus(z) - y*z is the stable sigmoid cross-entropy
      return tf.mean(tf.softplus(logits).sub(y.mul(logits))) as tf.Scalar;
    }, varList);
    opt.applyGradients(grads);
    const loss = value.dataSync()[0]!;
    value.dispose();
    tf.dispose(grads);

    losses.push(loss);
    if (onLog && step % cfg.logEvery === 0) onLog(step, loss);
  }
  opt.dispose();
  return losses;
}

/**
 * Build incorrect-output negatives from correct examples by replacing
 * a few target-region tokens with other vocabulary tokens. Labels are
 * known by construction, no grading needed.
 */
export function corruptExample(
  example: EncodedExample,
  vocabSize: number,
  rng: Rng,
  nSwaps = 3
): EncodedExample {
  const ids = [...example.ids];
  const lo = example.promptLen;
  const hi = ids.length - 1; // keep the EOS terminator
  for (let i = 0; i < nSwaps && hi > lo; i++) {
    const pos = lo + rng.int(hi - lo);
    let repl = 2 + rng.int(vocabSize - 2); // skip pad and eos
    if (repl === ids[pos]) repl = 2 + ((repl - 1) % (vocabSize - 2));
    ids[pos] = repl;
  }
  return { ids, promptLen: example.promptLen };
}
