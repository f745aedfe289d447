import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import { main } from "../src/cli.js";

const FIXTURES = new URL("./fixtures/", import.meta.url).pathname;
const dir = fs.mkdtempSync(path.join(os.tmpdir(), "uc-cli-"));

afterAll(() => fs.rmSync(dir, { recursive: true, force: true }));

describe("argument handling", () => {
  it("rejects unknown commands and missing flags", () => {
    expect(main([])).toBe(2);
    expect(main(["frobnicate"])).toBe(2);
    expect(main(["train", "--out", "x.json"])).toBe(2); // no --data
    expect(main(["train", "--data", FIXTURES + "NN.jsonl"])).toBe(2); // no --out
    expect(main(["predict", "--ckpt", "x", "--data", "y", "--out", "z", "--mode", "verbose"])).toBe(2);
    expect(main(["train", "--data", FIXTURES + "NN.jsonl", "--out", "x", "--updates", "-3"])).toBe(2);
    expect(main(["train", "--data", FIXTURES + "NN.jsonl", "--out", "x", "--size", "XXL"])).toBe(2);
  });
});

describe("train then predict", () => {
  const ckpt = path.join(dir, "model.json");
  const vckpt = path.join(dir, "verifier.json");
  const preds = path.join(dir, "preds.jsonl");

  it("writes a loadable checkpoint", () => {
    const rc = main([
      "train",
      "--data", FIXTURES + "NN.jsonl",
      "--data", FIXTURES + "RNRN-utn.jsonl",
      "--out", ckpt,
      "--size", "S",
      "--updates", "3",
      "--batch", "2",
      "--seed", "1",
    ]);
    expect(rc).toBe(0);
    const stored = JSON.parse(fs.readFileSync(ckpt, "utf-8"));
    expect(stored.kind).toBe("model");
    expect(stored.vocab[0]).toBe("<pad>");
    expect(Object.keys(stored.weights).length).toBeGreaterThan(10);
  }, 120_000);

  it("emits schema-complete scored predictions", () => {
    const rc = main([
      "train-verifier",
      "--data", FIXTURES + "NN.jsonl",
      "--data", FIXTURES + "RNRN-utn.jsonl",
      "--out", vckpt,
      "--size", "S",
      "--updates", "3",
      "--batch", "2",
      "--seed", "1",
    ]);
    expect(rc).toBe(0);

    const rc2 = main([
      "predict",
      "--ckpt", ckpt,
      "--data", FIXTURES + "RNRN-utn.jsonl",
      "--out", preds,
      "--mode", "temperature",
      "--temperature", "0.9",
      "--samples", "2",
      "--seed", "7",
      "--max-new", "8",
      "--verifier", vckpt,
    ]);
    expect(rc2).toBe(0);

    const lines = fs.readFileSync(preds, "utf-8").trim().split("\n");
    expect(lines).toHaveLength(6); // 3 prompts x 2 samples
    for (let i = 0; i < lines.length; i++) {
      const rec = JSON.parse(lines[i]!);
      expect(Object.keys(rec).sort()).toEqual(
        ["condition", "output", "problem_id", "sample_index", "score", "variant"]
      );
      expect(rec.variant).toBe("own");
      expect(rec.score).toBeGreaterThanOrEqual(0);
      expect(rec.score).toBeLessThanOrEqual(1);
      expect(rec.sample_index).toBe(i % 2);
    }
  }, 120_000);

  it("refuses a verifier with a different vocabulary", () => {
    const vbad = path.join(dir, "verifier-gtplan.json");
    const rc = main([
      "train-verifier",
      "--data", FIXTURES + "RNRN-utn.gtplan.jsonl",
      "--out", vbad,
      "--size", "S",
      "--updates", "1",
      "--batch", "2",
    ]);
    expect(rc).toBe(0);
    const rc2 = main([
      "predict",
      "--ckpt", ckpt,
      "--data", FIXTURES + "NN.jsonl",
      "--out", path.join(dir, "never.jsonl"),
      "--verifier", vbad,
      "--max-new", "4",
    ]);
    expect(rc2).toBe(1);
  }, 120_000);

  it("rejects prompts with tokens the model never saw", () => {
    const rc = main([
      "predict",
      "--ckpt", ckpt,
      "--data", FIXTURES + "RNRN-utn.gtplan.jsonl",
      "--out", path.join(dir, "never2.jsonl"),
      "--max-new", "4",
    ]);
    expect(rc).toBe(1);
  });
});
