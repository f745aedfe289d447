import * as fs from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { loadModel, loadVerifier, saveModel, saveVerifier } from "./checkpoint.js";
import {
  modelConfigFor,
  SAMPLE_DEFAULTS,
  SampleConfig,
  TRAIN_DEFAULTS,
  TrainConfig,
} from "./configs.js";
import { encodeExamples, loadDataset, maxSeqLenFor, Vocab } from "./data.js";
import { TrainerError, VocabMismatch } from "./errors.js";
import { SizeTag, Transformer } from "./model.js";
import { Rng } from "./rng.js";
import { predictRecords, predictionsToJsonl, Scorer } from "./sample.js";
import { smoothedLoss, trainModel } from "./train.js";
import { corruptExample, LabeledExample, trainVerifier, Verifier } from "./verifier.js";

class UsageError extends Error {}

const USAGE = `usage:
  uc-trainer train --data FILE [--data FILE ...] --out CKPT
      [--size S|M|L|XL] [--updates N] [--batch N] [--lr X]
      [--warmup N] [--seed N] [--max-seq-len N] [--log-every N]
  uc-trainer predict --ckpt CKPT --data FILE [--data FILE ...] --out FILE
      [--mode greedy|temperature] [--temperature X] [--samples N]
      [--seed N] [--max-new N] [--verifier CKPT]
  uc-trainer train-verifier --data FILE [--data FILE ...] --out CKPT
      [--size S|M|L|XL] [--updates N] [--batch N] [--lr X]
      [--warmup N] [--seed N] [--corruptions N] [--log-every N]`;

function need(value: string | undefined, flag: string): string {
  if (value === undefined) throw new UsageError(`missing required ${flag}`);
  return value;
}

function intArg(value: string | undefined, flag: string, fallback: number): number {
  if (value === undefined) return fallback;
  const n = Number(value);
  if (!Number.isInteger(n) || n < 0) throw new UsageError(`${flag} wants a nonnegative integer`);
  return n;
}

function floatArg(value: string | undefined, flag: string, fallback: number): number {
  if (value === undefined) return fallback;
  const n = Number(value);
  if (!Number.isFinite(n) || n <= 0) throw new UsageError(`${flag} wants a positive number`);
  return n;
}

function sizeArg(value: string | undefined): SizeTag {
  const tag = value ?? "M";
  if (tag !== "S" && tag !== "M" && tag !== "L" && tag !== "XL") {
    throw new UsageError(`--size must be one of S M L XL, got ${tag}`);
  }
  return tag;
}

interface TrainFlags {
  updates?: string;
  batch?: string;
  lr?: string;
  warmup?: string;
  seed?: string;
  "log-every"?: string;
}

function trainConfigFrom(v: TrainFlags): TrainConfig {
  return {
    nUpdates: intArg(v["updates"], "--updates", TRAIN_DEFAULTS.nUpdates),
    batchSize: intArg(v["batch"], "--batch", TRAIN_DEFAULTS.batchSize),
    learningRate: floatArg(v["lr"], "--lr", TRAIN_DEFAULTS.learningRate),
    warmupSteps: intArg(v["warmup"], "--warmup", TRAIN_DEFAULTS.warmupSteps),
    seed: intArg(v["seed"], "--seed", TRAIN_DEFAULTS.seed),
    logEvery: intArg(v["log-every"], "--log-every", TRAIN_DEFAULTS.logEvery),
  };
}

function logLine(step: number, loss: number): void {
  process.stderr.write(`step ${step} loss ${loss.toFixed(4)}\n`);
}

function cmdTrain(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      data: { type: "string", multiple: true },
      out: { type: "string" },
      size: { type: "string" },
      updates: { type: "string" },
      batch: { type: "string" },
      lr: { type: "string" },
      warmup: { type: "string" },
      seed: { type: "string" },
      "max-seq-len": { type: "string" },
      "log-every": { type: "string" },
    },
  });
  const paths = values.data ?? [];
  if (paths.length === 0) throw new UsageError("missing required --data");
  const out = need(values.out, "--out");

  const records = loadDataset(paths);
  const vocab = Vocab.build(records);
  const examples = encodeExamples(records, vocab);
  let maxSeqLen = maxSeqLenFor(examples);
  const requested = intArg(values["max-seq-len"], "--max-seq-len", maxSeqLen);
  if (requested < maxSeqLen) {
    throw new UsageError(`--max-seq-len ${requested} below longest example (${maxSeqLen})`);
  }
  maxSeqLen = requested;

  const tcfg = trainConfigFrom(values);
  const model = new Transformer(modelConfigFor(sizeArg(values.size), vocab.size, maxSeqLen, tcfg.seed));
  process.stderr.write(
    `training ${model.cfg.sizeTag} model, ${model.paramCount()} params, ` +
      `${examples.length} examples, vocab ${vocab.size}\n`
  );
  const losses = trainModel(model, examples, tcfg, logLine);
  saveModel(out, model, vocab);
  process.stderr.write(
    `saved ${out}, smoothed loss ${smoothedLoss(losses, 50).toFixed(4)}\n`
  );
}

function cmdPredict(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      ckpt: { type: "string" },
      data: { type: "string", multiple: true },
      out: { type: "string" },
      mode: { type: "string" },
      temperature: { type: "string" },
      samples: { type: "string" },
      seed: { type: "string" },
      "max-new": { type: "string" },
      verifier: { type: "string" },
    },
  });
  const paths = values.data ?? [];
  if (paths.length === 0) throw new UsageError("missing required --data");
  const out = need(values.out, "--out");
  const ckptPath = need(values.ckpt, "--ckpt");

  // flag validation first, file access after
  const mode = values.mode ?? SAMPLE_DEFAULTS.mode;
  if (mode !== "greedy" && mode !== "temperature") {
    throw new UsageError(`--mode must be greedy or temperature, got ${mode}`);
  }
  const cfg: SampleConfig = {
    mode,
    temperature: floatArg(values.temperature, "--temperature", SAMPLE_DEFAULTS.temperature),
    nSamples: intArg(values.samples, "--samples", SAMPLE_DEFAULTS.nSamples),
  };
  const maxNew = values["max-new"];
  if (maxNew !== undefined) cfg.maxNewTokens = intArg(maxNew, "--max-new", 0);
  const seed = intArg(values.seed, "--seed", 0);

  const { model, vocab } = loadModel(ckptPath);
  const records = loadDataset(paths);

  let scorer: Scorer | undefined;
  let verifier: Verifier | undefined;
  if (values.verifier) {
    const loaded = loadVerifier(values.verifier);
    if (JSON.stringify(loaded.vocab.toJSON()) !== JSON.stringify(vocab.toJSON())) {
      throw new VocabMismatch("verifier vocabulary differs from model vocabulary");
    }
    verifier = loaded.verifier;
    scorer = (promptIds, outputIds) => loaded.verifier.score(promptIds, outputIds);
  }

  const preds = predictRecords(model, vocab, records, cfg, seed, scorer);
  fs.writeFileSync(out, predictionsToJsonl(preds));
  process.stderr.write(`wrote ${preds.length} predictions to ${out}\n`);
  model.dispose();
  verifier?.dispose();
}

function cmdTrainVerifier(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      data: { type: "string", multiple: true },
      out: { type: "string" },
      size: { type: "string" },
      updates: { type: "string" },
      batch: { type: "string" },
      lr: { type: "string" },
      warmup: { type: "string" },
      seed: { type: "string" },
      corruptions: { type: "string" },
      "log-every": { type: "string" },
    },
  });
  const paths = values.data ?? [];
  if (paths.length === 0) throw new UsageError("missing required --data");
  const out = need(values.out, "--out");

  const records = loadDataset(paths);
  const vocab = Vocab.build(records);
  const examples = encodeExamples(records, vocab);
  const tcfg = trainConfigFrom(values);
  const nSwaps = intArg(values.corruptions, "--corruptions", 3);

  // one synthetic negative per dataset positive
  const rng = new Rng((tcfg.seed ^ 0xbadc0de) >>> 0);
  const labeled: LabeledExample[] = [];
  for (const ex of examples) {
    labeled.push({ example: ex, label: 1 });
    labeled.push({ example: corruptExample(ex, vocab.size, rng, nSwaps), label: 0 });
  }

  const verifier = new Verifier(
    modelConfigFor(sizeArg(values.size), vocab.size, maxSeqLenFor(examples), tcfg.seed)
  );
  process.stderr.write(`training verifier on ${labeled.length} labeled sequences\n`);
  trainVerifier(verifier, labeled, tcfg, logLine);
  saveVerifier(out, verifier, vocab);
  process.stderr.write(`saved ${out}\n`);
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "train") cmdTrain(rest);
    else if (command === "predict") cmdPredict(rest);
    else if (command === "train-verifier") cmdTrainVerifier(rest);
    else throw new UsageError(USAGE);
    return 0;
  } catch (err) {
    const code = (err as { code?: string }).code;
    if (err instanceof UsageError || (typeof code === "string" && code.startsWith("ERR_PARSE_ARGS"))) {
      process.stderr.write(`${(err as Error).message}\n`);
      return 2;
    }
    if (err instanceof TrainerError) {
      process.stderr.write(`${err.constructor.name}: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exitCode = main(process.argv.slice(2));
}
