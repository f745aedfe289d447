import * as tf from "@tensorflow/tfjs";

import { SampleConfig } from "./configs.js";
import { DatasetRecord, EOS, Vocab } from "./data.js";
import { SequenceTooLong } from "./errors.js";
import { Transformer } from "./model.js";
import { Rng } from "./rng.js";

/** Record shape the evaluator ingests. */
export interface PredictionRecord {
  problem_id: string;
  condition: string;
  variant: string;
  sample_index: number;
  output: string;
  score?: number;
}

/** Decode continuation token ids until EOS or the positional cap. */
export function generate(
  model: Transformer,
  promptIds: number[],
  cfg: SampleConfig,
  rng: Rng
): number[] {
  if (promptIds.length >= model.cfg.maxSeqLen) {
    throw new SequenceTooLong(
      `prompt of ${promptIds.length} tokens leaves no room in ${model.cfg.maxSeqLen}`
    );
  }
  const room = model.cfg.maxSeqLen - promptIds.length;
  const cap = Math.min(cfg.maxNewTokens ?? room, room);
  const ids = [...promptIds];
  const out: number[] = [];
  for (let i = 0; i < cap; i++) {
    const next = tf.tidy(() => {
      const tokens = tf.tensor2d([ids], [1, ids.length], "int32");
      const logits = model.logits(tokens);
      const last = logits
        .slice([0, ids.length - 1, 0], [1, 1, -1])
        .reshape([model.cfg.vocabSize]);
      if (cfg.mode === "greedy") {
        return last.argMax().dataSync()[0]!;
      }
      const probs = tf.softmax(last.div(cfg.temperature));
      return rng.categorical(probs.dataSync() as Float32Array);
    });
    if (next === EOS) break;
    ids.push(next);
    out.push(next);
  }
  return out;
}

export type Scorer = (promptIds: number[], outputIds: number[]) => number;

/**
 * Run the sampler over dataset records and emit evaluator records,
 * order-stable by (record index, sample index). Greedy mode emits one
 * sample per prompt regardless of nSamples; records missing a variant
 * field are tagged "own".
 */
export function predictRecords(
  model: Transformer,
  vocab: Vocab,
  records: DatasetRecord[],
  cfg: SampleConfig,
  seed: number,
  scorer?: Scorer
): PredictionRecord[] {
  const nSamples = cfg.mode === "greedy" ? 1 : cfg.nSamples;
  const out: PredictionRecord[] = [];
  for (let r = 0; r < records.length; r++) {
    const rec = records[r]!;
    const promptIds = vocab.encode(rec.prompt);
    for (let s = 0; s < nSamples; s++) {
      const rng = new Rng((seed * 1000003 + r * 8191 + s) >>> 0);
      const outputIds = generate(model, promptIds, cfg, rng);
      const prediction: PredictionRecord = {
        problem_id: rec.problem_id,
        condition: rec.condition,
        variant: rec.variant ?? "own",
        sample_index: s,
        output: vocab.decode(outputIds),
      };
      if (scorer) prediction.score = scorer(promptIds, outputIds);
      out.push(prediction);
    }
  }
  return out;
}

export function predictionsToJsonl(records: PredictionRecord[]): string {
  return records.map((r) => JSON.stringify(r)).join("\n") + (records.length ? "\n" : "");
}
