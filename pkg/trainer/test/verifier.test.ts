import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { loadVerifier, saveVerifier } from "../src/checkpoint.js";
import { TrainConfig } from "../src/configs.js";
import { encodeExamples, EOS, loadDataset, Vocab } from "../src/data.js";
import { ModelConfig } from "../src/model.js";
import { Rng } from "../src/rng.js";
import { corruptExample, LabeledExample, trainVerifier, Verifier } from "../src/verifier.js";

const FIXTURES = new URL("./fixtures/", import.meta.url).pathname;

const records = loadDataset([FIXTURES + "NN.jsonl", FIXTURES + "RNRN-utn.jsonl"]);
const vocab = Vocab.build(records);
const examples = encodeExamples(records, vocab);

function verifierConfig(maxSeqLen: number): ModelConfig {
  return { nLayers: 2, modelWidth: 24, nHeads: 2, vocabSize: vocab.size, maxSeqLen, seed: 4 };
}

describe("corruption", () => {
  it("rewrites only the target region and keeps the terminator", () => {
    for (let i = 0; i < examples.length; i++) {
      const ex = examples[i]!;
      const bad = corruptExample(ex, vocab.size, new Rng(100 + i), 3);
      expect(bad.ids).toHaveLength(ex.ids.length);
      expect(bad.promptLen).toBe(ex.promptLen);
      expect(bad.ids.slice(0, ex.promptLen)).toEqual(ex.ids.slice(0, ex.promptLen));
      expect(bad.ids[bad.ids.length - 1]).toBe(EOS);
      expect(bad.ids).not.toEqual(ex.ids);
      for (const id of bad.ids.slice(ex.promptLen, -1)) {
        expect(id).toBeGreaterThanOrEqual(2);
        expect(id).toBeLessThan(vocab.size);
      }
    }
  });

  it("is reproducible from the rng seed", () => {
    const a = corruptExample(examples[0]!, vocab.size, new Rng(9), 3);
    const b = corruptExample(examples[0]!, vocab.size, new Rng(9), 3);
    expect(a.ids).toEqual(b.ids);
  });
});

describe("verifier training", () => {
  it("learns to rank clean targets above corrupted ones", () => {
    const rng = new Rng(55);
    const labeled: LabeledExample[] = [];
    for (const ex of examples) {
      labeled.push({ example: ex, label: 1 });
      labeled.push({ example: corruptExample(ex, vocab.size, rng, 5), label: 0 });
    }
    const maxLen = Math.max(...labeled.map((d) => d.example.ids.length));
    const verifier = new Verifier(verifierConfig(maxLen));
    const cfg: TrainConfig = {
      nUpdates: 200,
      batchSize: 6,
      learningRate: 1e-2,
      warmupSteps: 0,
      seed: 5,
      logEvery: 1000,
    };
    const losses = trainVerifier(verifier, labeled, cfg);
    expect(losses[losses.length - 1]!).toBeLessThan(0.5);

    const score = (d: LabeledExample) =>
      verifier.score(d.example.ids.slice(0, d.example.promptLen), d.example.ids.slice(d.example.promptLen));
    const pos = labeled.filter((d) => d.label === 1).map(score);
    const neg = labeled.filter((d) => d.label === 0).map(score);
    const mean = (xs: number[]) => xs.reduce((a, b) => a + b, 0) / xs.length;
    expect(mean(pos)).toBeGreaterThan(mean(neg) + 0.15);
    for (const s of [...pos, ...neg]) {
      expect(s).toBeGreaterThanOrEqual(0);
      expect(s).toBeLessThanOrEqual(1);
    }

    // round-trip: stored weights give identical scores back
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "uc-verifier-"));
    const ckpt = path.join(dir, "verifier.json");
    saveVerifier(ckpt, verifier, vocab);
    const loaded = loadVerifier(ckpt);
    expect(loaded.vocab.tokens).toEqual(vocab.tokens);
    const again = labeled.filter((d) => d.label === 1).map((d) =>
      loaded.verifier.score(
        d.example.ids.slice(0, d.example.promptLen),
        d.example.ids.slice(d.example.promptLen)
      )
    );
    for (let i = 0; i < pos.length; i++) {
      expect(again[i]!).toBeCloseTo(pos[i]!, 6);
    }
    verifier.dispose();
    loaded.verifier.dispose();
    fs.rmSync(dir, { recursive: true, force: true });
  }, 180_000);
});
