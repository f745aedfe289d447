import * as fs from "node:fs";
import * as tf from "@tensorflow/tfjs";

import { Vocab } from "./data.js";
import { ModelConfig, Transformer } from "./model.js";
import { Verifier } from "./verifier.js";

interface StoredWeights {
  [name: string]: { shape: number[]; data: number[] };
}

interface StoredCheckpoint {
  kind: "model" | "verifier";
  config: ModelConfig;
  vocab: string[];
  weights: StoredWeights;
}

function dumpWeights(vars: Map<string, tf.Variable>): StoredWeights {
  const out: StoredWeights = {};
  for (const [name, v] of vars) {
    out[name] = { shape: v.shape.slice(), data: Array.from(v.dataSync()) };
  }
  return out;
}

function restoreWeights(vars: Map<string, tf.Variable>, stored: StoredWeights): void {
  for (const [name, v] of vars) {
    const w = stored[name];
    if (!w) throw new Error(`checkpoint missing weight ${name}`);
    v.assign(tf.tensor(w.data, w.shape as [number]));
  }
}

export function saveModel(path: string, model: Transformer, vocab: Vocab): void {
  const obj: StoredCheckpoint = {
    kind: "model",
    config: model.cfg,
    vocab: vocab.toJSON(),
    weights: dumpWeights(model.trainables()),
  };
  fs.writeFileSync(path, JSON.stringify(obj));
}

export function loadModel(path: string): { model: Transformer; vocab: Vocab } {
  const obj = JSON.parse(fs.readFileSync(path, "utf-8")) as StoredCheckpoint;
  if (obj.kind !== "model") throw new Error(`${path} is not a model checkpoint`);
  const model = new Transformer(obj.config);
  restoreWeights(model.trainables(), obj.weights);
  return { model, vocab: new Vocab(obj.vocab) };
}

export function saveVerifier(path: string, verifier: Verifier, vocab: Vocab): void {
  const obj: StoredCheckpoint = {
    kind: "verifier",
    config: verifier.base.cfg,
    vocab: vocab.toJSON(),
    weights: dumpWeights(verifier.trainables()),
  };
  fs.writeFileSync(path, JSON.stringify(obj));
}

export function loadVerifier(path: string): { verifier: Verifier; vocab: Vocab } {
  const obj = JSON.parse(fs.readFileSync(path, "utf-8")) as StoredCheckpoint;
  if (obj.kind !== "verifier") throw new Error(`${path} is not a verifier checkpoint`);
  const verifier = new Verifier(obj.config);
  restoreWeights(verifier.trainables(), obj.weights);
  return { verifier, vocab: new Vocab(obj.vocab) };
}
