import * as fs from "node:fs";

import { VocabMismatch } from "./errors.js";

/** One prompt/target pair as emitted by the dataset generator. */
export interface DatasetRecord {
  problem_id: string;
  condition: string;
  prompt: string;
  target: string;
  /** present in gt-plan-prompted files; defaults to "own" downstream */
  variant?: string;
}

export function readJsonl(path: string): unknown[] {
  const out: unknown[] = [];
  const text = fs.readFileSync(path, "utf-8");
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed) out.push(JSON.parse(trimmed));
  }
  return out;
}

export function loadDataset(paths: string[]): DatasetRecord[] {
  const records: DatasetRecord[] = [];
  for (const path of paths) {
    for (const obj of readJsonl(path)) {
      const rec = obj as Partial<DatasetRecord>;
      if (
        typeof rec.problem_id !== "string" ||
        typeof rec.condition !== "string" ||
        typeof rec.prompt !== "string" ||
        typeof rec.target !== "string"
      ) {
        throw new VocabMismatch(`${path}: not a prompt/target record`);
      }
      records.push(rec as DatasetRecord);
    }
  }
  return records;
}

export const PAD = 0;
export const EOS = 1;

/**
 * Whitespace-token vocabulary built from a dataset. Ids 0 and 1 are
 * reserved for padding and end-of-sequence; the rest are the distinct
 * dataset tokens in sorted order, so the mapping is reproducible.
 */
export class Vocab {
  readonly tokens: string[];
  private readonly index: Map<string, number>;

  constructor(tokens: string[]) {
    this.tokens = tokens;
    this.index = new Map(tokens.map((t, i) => [t, i]));
  }

  static build(records: DatasetRecord[]): Vocab {
    const seen = new Set<string>();
    for (const rec of records) {
      for (const tok of `${rec.prompt} ${rec.target}`.split(/\s+/)) {
        if (tok) seen.add(tok);
      }
    }
    return new Vocab(["<pad>", "<eos>", ...[...seen].sort()]);
  }

  get size(): number {
    return this.tokens.length;
  }

  encode(text: string): number[] {
    const ids: number[] = [];
    for (const tok of text.split(/\s+/)) {
      if (!tok) continue;
      const id = this.index.get(tok);
      if (id === undefined) throw new VocabMismatch(`unknown token ${JSON.stringify(tok)}`);
      ids.push(id);
    }
    return ids;
  }

  decode(ids: number[]): string {
    return ids
      .filter((id) => id !== PAD && id !== EOS)
      .map((id) => {
        const tok = this.tokens[id];
        if (tok === undefined) throw new VocabMismatch(`id ${id} outside vocabulary`);
        return tok;
      })
      .join(" ");
  }

  toJSON(): string[] {
    return this.tokens;
  }
}

/** Prompt+target token ids with an EOS terminator appended. */
export interface EncodedExample {
  ids: number[];
  promptLen: number;
}

export function encodeExamples(records: DatasetRecord[], vocab: Vocab): EncodedExample[] {
  return records.map((rec) => {
    const prompt = vocab.encode(rec.prompt);
    const target = vocab.encode(rec.target);
    return { ids: [...prompt, ...target, EOS], promptLen: prompt.length };
  });
}

export function maxSeqLenFor(examples: EncodedExample[]): number {
  return Math.max(...examples.map((ex) => ex.ids.length));
}

/** Fixed-width int32 batch plus per-row prompt and total lengths. */
export interface Batch {
  tokens: number[][];
  promptLens: number[];
  lengths: number[];
}

export function makeBatch(examples: EncodedExample[], width: number): Batch {
  const tokens = examples.map((ex) => {
    if (ex.ids.length > width) {
      throw new VocabMismatch(`example of length ${ex.ids.length} exceeds batch width ${width}`);
    }
    return [...ex.ids, ...new Array<number>(width - ex.ids.length).fill(PAD)];
  });
  return {
    tokens,
    promptLens: examples.map((ex) => ex.promptLen),
    lengths: examples.map((ex) => ex.ids.length),
  };
}
