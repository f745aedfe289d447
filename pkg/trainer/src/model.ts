import * as tf from "@tensorflow/tfjs";

import { Batch } from "./data.js";
import { SequenceTooLong } from "./errors.js";

export type SizeTag = "S" | "M" | "L" | "XL";

export interface ModelConfig {
  nLayers: number;
  modelWidth: number;
  nHeads: number;
  vocabSize: number;
  maxSeqLen: number;
  seed: number;
  sizeTag?: SizeTag;
}

interface LayerVars {
  ln1g: tf.Variable;
  ln1b: tf.Variable;
  wqkv: tf.Variable;
  bqkv: tf.Variable;
  wo: tf.Variable;
  bo: tf.Variable;
  ln2g: tf.Variable;
  ln2b: tf.Variable;
  w1: tf.Variable;
  b1: tf.Variable;
  w2: tf.Variable;
  b2: tf.Variable;
}

const INIT_STD = 0.02;
const LN_EPS = 1e-5;

let instanceCounter = 0;

function layerNorm(x: tf.Tensor, gain: tf.Variable, bias: tf.Variable): tf.Tensor {
  const { mean, variance } = tf.moments(x, -1, true);
  return x.sub(mean).div(variance.add(LN_EPS).sqrt()).mul(gain).add(bias);
}

/**
 * Token embedding, stack of pre-norm causal self-attention blocks, and a
 * linear decoder back to vocabulary logits. Weights are plain variables
 * keyed by logical name so checkpoints and gradient tests can address
 * them individually. Initialization is deterministic in config.seed.
 */
export class Transformer {
  readonly cfg: ModelConfig;
  private readonly vars = new Map<string, tf.Variable>();
  private readonly layers: LayerVars[] = [];
  private seedCursor: number;
  private readonly prefix: string;

  constructor(cfg: ModelConfig) {
    if (cfg.modelWidth % cfg.nHeads !== 0) {
      throw new Error(`width ${cfg.modelWidth} not divisible by ${cfg.nHeads} heads`);
    }
    this.cfg = cfg;
    this.seedCursor = cfg.seed * 7919 + 1;
    this.prefix = `t${instanceCounter++}`;
    const w = cfg.modelWidth;

    this.addNormal("tokEmb", [cfg.vocabSize, w]);
    this.addNormal("posEmb", [cfg.maxSeqLen, w]);
    for (let i = 0; i < cfg.nLayers; i++) {
      this.layers.push({
        ln1g: this.addOnes(`L${i}.ln1g`, [w]),
        ln1b: this.addZeros(`L${i}.ln1b`, [w]),
        wqkv: this.addNormal(`L${i}.wqkv`, [w, 3 * w]),
        bqkv: this.addZeros(`L${i}.bqkv`, [3 * w]),
        wo: this.addNormal(`L${i}.wo`, [w, w]),
        bo: this.addZeros(`L${i}.bo`, [w]),
        ln2g: this.addOnes(`L${i}.ln2g`, [w]),
        ln2b: this.addZeros(`L${i}.ln2b`, [w]),
        w1: this.addNormal(`L${i}.w1`, [w, 4 * w]),
        b1: this.addZeros(`L${i}.b1`, [4 * w]),
        w2: this.addNormal(`L${i}.w2`, [4 * w, w]),
        b2: this.addZeros(`L${i}.b2`, [w]),
      });
    }
    this.addOnes("lnfg", [w]);
    this.addZeros("lnfb", [w]);
    this.addNormal("head", [w, cfg.vocabSize]);
    this.addZeros("bhead", [cfg.vocabSize]);
  }

  private addNormal(name: string, shape: number[]): tf.Variable {
    const v = tf.variable(
      tf.randomNormal(shape, 0, INIT_STD, "float32", this.seedCursor++),
      true,
      `${this.prefix}/${name}`
    );
    this.vars.set(name, v);
    return v;
  }

  private addOnes(name: string, shape: number[]): tf.Variable {
    const v = tf.variable(tf.ones(shape), true, `${this.prefix}/${name}`);
    this.vars.set(name, v);
    return v;
  }

  private addZeros(name: string, shape: number[]): tf.Variable {
    const v = tf.variable(tf.zeros(shape), true, `${this.prefix}/${name}`);
    this.vars.set(name, v);
    return v;
  }

  /** Logical-name map over every trainable weight. */
  trainables(): Map<string, tf.Variable> {
    return this.vars;
  }

  variable(name: string): tf.Variable {
    const v = this.vars.get(name);
    if (!v) throw new Error(`no variable ${name}`);
    return v;
  }

  paramCount(): number {
    let n = 0;
    for (const v of this.vars.values()) n += v.size;
    return n;
  }

  /** Final layer-normalized hidden states, [batch, seq, width]. */
  hidden(tokens: tf.Tensor2D): tf.Tensor3D {
    const [, T] = tokens.shape;
    if (T > this.cfg.maxSeqLen) {
      throw new SequenceTooLong(`sequence ${T} exceeds positional range ${this.cfg.maxSeqLen}`);
    }
    const { nHeads, modelWidth } = this.cfg;
    const hd = modelWidth / nHeads;

    let x = tf
      .gather(this.variable("tokEmb"), tokens)
      .add(this.variable("posEmb").slice([0, 0], [T, modelWidth]));

    const lower = tf.linalg.bandPart(tf.ones([T, T]), -1, 0);
    const negMask = tf.scalar(1).sub(lower).mul(-1e9).reshape([1, 1, T, T]);

    for (const L of this.layers) {
      const h = layerNorm(x, L.ln1g, L.ln1b);
      const qkv = tf.matMul(h.reshape([-1, modelWidth]), L.wqkv).add(L.bqkv);
      const [q, k, v] = tf.split(qkv.reshape([-1, T, 3 * modelWidth]), 3, -1).map((part) =>
        part.reshape([-1, T, nHeads, hd]).transpose([0, 2, 1, 3])
      ) as [tf.Tensor4D, tf.Tensor4D, tf.Tensor4D];
      const scores = tf.matMul(q, k, false, true).div(Math.sqrt(hd)).add(negMask);
      const att = tf.matMul(tf.softmax(scores), v);
      const merged = att.transpose([0, 2, 1, 3]).reshape([-1, T, modelWidth]);
      const proj = tf.matMul(merged.reshape([-1, modelWidth]), L.wo).add(L.bo);
      x = x.add(proj.reshape([-1, T, modelWidth]));

      const h2 = layerNorm(x, L.ln2g, L.ln2b);
      const up = tf.relu(tf.matMul(h2.reshape([-1, modelWidth]), L.w1).add(L.b1));
      const down = tf.matMul(up, L.w2).add(L.b2);
      x = x.add(down.reshape([-1, T, modelWidth]));
    }
    return layerNorm(x, this.variable("lnfg"), this.variable("lnfb")) as tf.Tensor3D;
  }

  /** Next-token logits, [batch, seq, vocab]. */
  logits(tokens: tf.Tensor2D): tf.Tensor3D {
    const [, T] = tokens.shape;
    const h = this.hidden(tokens).reshape([-1, this.cfg.modelWidth]);
    return tf
      .matMul(h, this.variable("head"))
      .add(this.variable("bhead"))
      .reshape([-1, T, this.cfg.vocabSize]) as tf.Tensor3D;
  }

  /**
   * Mean cross-entropy over target-region positions only. A position
   * contributes iff its label index falls inside [promptLen, length),
   * so prompt tokens and padding never produce gradient.
   */
  maskedLoss(batch: Batch): tf.Scalar {
    const B = batch.tokens.length;
    const T = batch.tokens[0]!.length;
    const tokens = tf.tensor2d(batch.tokens.flat(), [B, T], "int32");
    const inputs = tokens.slice([0, 0], [B, T - 1]) as tf.Tensor2D;
    const labels = tokens.slice([0, 1], [B, T - 1]);

    const maskRows: number[][] = batch.tokens.map((_, b) => {
      const row = new Array<number>(T - 1).fill(0);
      for (let t = 0; t < T - 1; t++) {
        const labelIdx = t + 1;
        if (labelIdx >= batch.promptLens[b]! && labelIdx < batch.lengths[b]!) row[t] = 1;
      }
      return row;
    });
    const mask = tf.tensor2d(maskRows.flat(), [B, T - 1]);

    const logits = this.logits(inputs);
    const logProbs = tf.logSoftmax(logits);
    const picked = tf.sum(tf.mul(tf.oneHot(labels as tf.Tensor2D, this.cfg.vocabSize), logProbs), -1);
    const ce = tf.neg(picked);
    return tf.sum(ce.mul(mask)).div(tf.sum(mask)) as tf.Scalar;
  }

  lossValue(batch: Batch): number {
    return tf.tidy(() => this.maskedLoss(batch).dataSync()[0]!);
  }

  dispose(): void {
    for (const v of this.vars.values()) v.dispose();
    this.vars.clear();
  }
}
