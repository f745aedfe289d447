import { describe, expect, it } from "vitest";

import { TrainConfig } from "../src/configs.js";
import { encodeExamples, loadDataset, Vocab } from "../src/data.js";
import { Transformer } from "../src/model.js";
import { Rng } from "../src/rng.js";
import { generate } from "../src/sample.js";
import { smoothedLoss, trainModel } from "../src/train.js";

const FIXTURES = new URL("./fixtures/", import.meta.url).pathname;

// Overfitting one sequence is the cheapest end-to-end check that the
// loss, gradients, and decoder all line up: greedy decoding must then
// reproduce the target exactly and stop at EOS on its own.
describe("single-example memorization", () => {
  it("greedy-decodes the memorized target token for token", () => {
    const records = loadDataset([FIXTURES + "RNRN-utn.jsonl"]).slice(0, 1);
    const vocab = Vocab.build(records);
    const examples = encodeExamples(records, vocab);
    const maxLen = examples[0]!.ids.length;

    const model = new Transformer({
      nLayers: 2,
      modelWidth: 32,
      nHeads: 2,
      vocabSize: vocab.size,
      maxSeqLen: maxLen,
      seed: 1,
    });
    const cfg: TrainConfig = {
      nUpdates: 300,
      batchSize: 2,
      learningRate: 1e-2,
      warmupSteps: 10,
      seed: 1,
      logEvery: 1000,
    };
    const losses = trainModel(model, examples, cfg);
    expect(smoothedLoss(losses, 20)).toBeLessThan(0.05);

    const promptIds = vocab.encode(records[0]!.prompt);
    const out = generate(model, promptIds, { mode: "greedy", temperature: 1, nSamples: 1 }, new Rng(0));
    expect(vocab.decode(out)).toBe(records[0]!.target);
    // EOS fired before the positional cap, not at it
    expect(promptIds.length + out.length).toBeLessThan(maxLen);
    model.dispose();
  }, 180_000);
});
