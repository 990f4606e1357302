/**
 * Pretraining and fine-tuning loops.
 *
 * Both stages optimize teacher-forced token-level cross-entropy on
 * (input -> target) pairs. In sum mode each pretraining step draws one TOC
 * batch and one MLM batch, and the optimization objective is the sum of the
 * two batch losses; the per-step log keeps the addends so the bookkeeping
 * can be audited.
 */

import { Adam, Model, ModelConfig, TINY } from "./model.js";
import { PretrainPair, FinetunePair } from "./data.js";
import { Rng } from "./rng.js";
import { Tape, addScalars, scaleScalar } from "./tensor.js";
import { Vocab } from "./vocab.js";

export type LossMix = "toc_only" | "mlm_only" | "sum";

export interface TrainConfig {
  model: ModelConfig;
  epochs: number;
  batchSize: number;
  learningRate: number;
  seed: number;
  lossMix: LossMix;
}

export const DEFAULT_TRAIN: TrainConfig = {
  model: TINY,
  epochs: 10,
  batchSize: 16,
  learningRate: 2e-3,
  seed: 1,
  lossMix: "sum",
};

export interface StepLog {
  step: number;
  loss: number;
  tocLoss?: number;
  mlmLoss?: number;
}

export class EmptyCorpus extends Error {}
export class VocabularyOverflow extends Error {}

interface Encoded {
  input: number[];
  target: number[];
}

function encodePairs(vocab: Vocab, pairs: { input: string; target: string }[]): Encoded[] {
  return pairs.map((p) => ({
    input: vocab.encode(p.input, false),
    target: vocab.encode(p.target, true),
  }));
}

/** Mean per-token cross-entropy over one batch, as an autograd scalar. */
function batchLoss(tape: Tape, model: Model, batch: Encoded[]) {
  const losses = [];
  let tokens = 0;
  for (const ex of batch) {
    const { loss, tokens: t } = model.exampleLoss(tape, ex.input, ex.target);
    losses.push(loss);
    tokens += t;
  }
  return scaleScalar(tape, addScalars(tape, losses), 1 / Math.max(1, tokens));
}

function* batches<T>(items: T[], size: number, rng: Rng): Generator<T[]> {
  const order = rng.shuffle([...items.keys()]);
  for (let start = 0; start < order.length; start += size) {
    yield order.slice(start, start + size).map((i) => items[i]);
  }
}

export function buildVocab(texts: Iterable<string>, cap = 4000): Vocab {
  const vocab = Vocab.build(texts);
  if (vocab.size > cap) {
    throw new VocabularyOverflow(`vocabulary has ${vocab.size} entries (cap ${cap})`);
  }
  return vocab;
}

export function pretrain(
  pairs: PretrainPair[],
  config: TrainConfig,
  vocab?: Vocab,
  onLog?: (log: StepLog) => void,
): { model: Model; logs: StepLog[] } {
  if (!pairs.length) throw new EmptyCorpus("no pretraining pairs");
  const voc =
    vocab ?? buildVocab(pairs.flatMap((p) => [p.input, p.target]));
  const rng = new Rng(config.seed);
  const model = new Model(voc, config.model, rng.fork(1));
  const optimizer = new Adam(model, config.learningRate);
  const logs: StepLog[] = [];
  const toc = encodePairs(voc, pairs.filter((p) => p.objective === "toc"));
  const mlm = encodePairs(voc, pairs.filter((p) => p.objective === "mlm"));
  const shuffleRng = rng.fork(2);
  let step = 0;

  const record = (log: StepLog) => {
    logs.push(log);
    onLog?.(log);
  };

  for (let epoch = 0; epoch < config.epochs; epoch++) {
    if (config.lossMix === "sum") {
      if (!toc.length || !mlm.length) {
        throw new EmptyCorpus("sum mode needs both toc and mlm pairs");
      }
      const tocBatches = [...batches(toc, config.batchSize, shuffleRng)];
      const mlmBatches = [...batches(mlm, config.batchSize, shuffleRng)];
      const n = Math.min(tocBatches.length, mlmBatches.length);
      for (let i = 0; i < n; i++) {
        const tape = new Tape();
        const tocLoss = batchLoss(tape, model, tocBatches[i]);
        const mlmLoss = batchLoss(tape, model, mlmBatches[i]);
        const total = addScalars(tape, [tocLoss, mlmLoss]);
        model.zeroGrads();
        tape.backward(total);
        optimizer.step();
        record({
          step: step++,
          loss: total.data[0],
          tocLoss: tocLoss.data[0],
          mlmLoss: mlmLoss.data[0],
        });
      }
    } else {
      const pool = config.lossMix === "toc_only" ? toc : mlm;
      if (!pool.length) throw new EmptyCorpus(`no ${config.lossMix} pairs`);
      for (const batch of batches(pool, config.batchSize, shuffleRng)) {
        const tape = new Tape();
        const loss = batchLoss(tape, model, batch);
        model.zeroGrads();
        tape.backward(loss);
        optimizer.step();
        record({ step: step++, loss: loss.data[0] });
      }
    }
  }
  return { model, logs };
}

export interface FinetuneResult {
  model: Model;
  logs: StepLog[];
  devQmByEpoch: number[];
}

export function finetune(
  model: Model,
  pairs: FinetunePair[],
  config: TrainConfig,
  onEpoch?: (epoch: number, model: Model) => number | void,
): FinetuneResult {
  if (!pairs.length) throw new EmptyCorpus("no fine-tuning pairs");
  const encoded = encodePairs(model.vocab, pairs);
  const optimizer = new Adam(model, config.learningRate);
  const rng = new Rng(config.seed ^ 0x51ed);
  const logs: StepLog[] = [];
  const devQmByEpoch: number[] = [];
  let step = 0;
  for (let epoch = 0; epoch < config.epochs; epoch++) {
    for (const batch of batches(encoded, config.batchSize, rng)) {
      const tape = new Tape();
      const loss = batchLoss(tape, model, batch);
      model.zeroGrads();
      tape.backward(loss);
      optimizer.step();
      logs.push({ step: step++, loss: loss.data[0] });
    }
    const qm = onEpoch?.(epoch, model);
    if (typeof qm === "number") devQmByEpoch.push(qm);
  }
  return { model, logs, devQmByEpoch };
}

export function decodeAll(model: Model, inputs: string[]): string[] {
  return inputs.map((text) => model.vocab.decode(model.greedyDecode(model.vocab.encode(text, false))));
}
