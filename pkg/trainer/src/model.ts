/**
 * GRU encoder-decoder with dot attention, sized for desk-scale experiments.
 * Teacher-forced training; greedy decoding. Checkpoints are plain JSON.
 */

import {
  Tape,
  Tensor,
  add,
  addBias,
  addScalars,
  affine,
  concatCols,
  crossEntropy,
  gatherRow,
  matmul,
  mul,
  sigmoid,
  softmaxCol,
  stackRows,
  tanh,
  transpose,
} from "./tensor.js";
import { Rng } from "./rng.js";
import { BOS, Vocab } from "./vocab.js";

export interface ModelConfig {
  dEmb: number;
  dHidden: number;
  maxDecodeLen: number;
}

export const TINY: ModelConfig = { dEmb: 48, dHidden: 64, maxDecodeLen: 64 };

interface GruParams {
  wz: Tensor; uz: Tensor; bz: Tensor;
  wr: Tensor; ur: Tensor; br: Tensor;
  wn: Tensor; un: Tensor; bn: Tensor;
}

export class Model {
  readonly config: ModelConfig;
  readonly vocab: Vocab;
  readonly params = new Map<string, Tensor>();

  emb!: Tensor;
  enc!: GruParams;
  dec!: GruParams;
  wa!: Tensor;
  wo!: Tensor;
  bo!: Tensor;
  wv!: Tensor;
  bv!: Tensor;

  constructor(vocab: Vocab, config: ModelConfig, rng: Rng | null) {
    this.config = config;
    this.vocab = vocab;
    const { dEmb, dHidden } = config;
    const init = (name: string, rows: number, cols: number, scale: number): Tensor => {
      const t = new Tensor(rows, cols, undefined, true);
      if (rng && scale > 0) for (let i = 0; i < t.size; i++) t.data[i] = rng.gauss() * scale;
      this.params.set(name, t);
      return t;
    };
    const gru = (prefix: string, dIn: number): GruParams => ({
      wz: init(`${prefix}.wz`, dIn, dHidden, 0.15),
      uz: init(`${prefix}.uz`, dHidden, dHidden, 0.15),
      bz: init(`${prefix}.bz`, 1, dHidden, 0),
      wr: init(`${prefix}.wr`, dIn, dHidden, 0.15),
      ur: init(`${prefix}.ur`, dHidden, dHidden, 0.15),
      br: init(`${prefix}.br`, 1, dHidden, 0),
      wn: init(`${prefix}.wn`, dIn, dHidden, 0.15),
      un: init(`${prefix}.un`, dHidden, dHidden, 0.15),
      bn: init(`${prefix}.bn`, 1, dHidden, 0),
    });
    this.emb = init("emb", vocab.size, dEmb, 0.3);
    this.enc = gru("enc", dEmb);
    // input feeding: the previous attention context rides along with the
    // token embedding, which keeps the encoder path load-bearing
    this.dec = gru("dec", dEmb + dHidden);
    this.wa = init("wa", dHidden, dHidden, 0.3);
    this.wo = init("wo", dHidden * 2, dHidden, 0.15);
    this.bo = init("bo", 1, dHidden, 0);
    this.wv = init("wv", dHidden, vocab.size, 0.15);
    this.bv = init("bv", 1, vocab.size, 0);
  }

  private gruStep(tape: Tape, p: GruParams, x: Tensor, h: Tensor): Tensor {
    const z = sigmoid(tape, addBias(tape, add(tape, matmul(tape, x, p.wz), matmul(tape, h, p.uz)), p.bz));
    const r = sigmoid(tape, addBias(tape, add(tape, matmul(tape, x, p.wr), matmul(tape, h, p.ur)), p.br));
    const n = tanh(
      tape,
      addBias(tape, add(tape, matmul(tape, x, p.wn), matmul(tape, mul(tape, r, h), p.un)), p.bn),
    );
    // h' = (1 - z) * h + z * n
    const keep = mul(tape, affine(tape, z, -1, 1), h);
    return add(tape, keep, mul(tape, z, n));
  }

  private encode(tape: Tape, inputIds: number[]): { states: Tensor; last: Tensor } {
    let h: Tensor = Tensor.zeros(1, this.config.dHidden);
    const states: Tensor[] = [];
    for (const id of inputIds) {
      const x = gatherRow(tape, this.emb, id);
      h = this.gruStep(tape, this.enc, x, h);
      states.push(h);
    }
    return { states: stackRows(tape, states), last: h };
  }

  private decodeStep(
    tape: Tape,
    encStates: Tensor,
    h: Tensor,
    context: Tensor,
    prevId: number,
  ): { h: Tensor; context: Tensor; logits: Tensor } {
    const x = concatCols(tape, gatherRow(tape, this.emb, prevId), context);
    const hNext = this.gruStep(tape, this.dec, x, h);
    // bilinear attention over encoder states
    const query = matmul(tape, hNext, this.wa); // 1 x dH
    const scores = matmul(tape, encStates, transpose(tape, query)); // T x 1
    const weights = softmaxCol(tape, scores);
    const ctxNext = transpose(tape, matmul(tape, transpose(tape, encStates), weights)); // 1 x dH
    const o = tanh(tape, addBias(tape, matmul(tape, concatCols(tape, hNext, ctxNext), this.wo), this.bo));
    const logits = addBias(tape, matmul(tape, o, this.wv), this.bv);
    return { h: hNext, context: ctxNext, logits };
  }

  /** Teacher-forced token-level cross-entropy, summed over target tokens. */
  exampleLoss(tape: Tape, inputIds: number[], targetIds: number[]): { loss: Tensor; tokens: number } {
    const { states, last } = this.encode(tape, inputIds);
    let h = last;
    let context: Tensor = Tensor.zeros(1, this.config.dHidden);
    let prev = BOS;
    const losses: Tensor[] = [];
    for (const target of targetIds) {
      const step = this.decodeStep(tape, states, h, context, prev);
      h = step.h;
      context = step.context;
      losses.push(crossEntropy(tape, step.logits, target));
      prev = target;
    }
    return { loss: addScalars(tape, losses), tokens: targetIds.length };
  }

  /** Greedy decode; returns token ids up to (not including) EOS. */
  greedyDecode(inputIds: number[]): number[] {
    const tape = new Tape();
    tape.active = false;
    const { states, last } = this.encode(tape, inputIds);
    let h = last;
    let context: Tensor = Tensor.zeros(1, this.config.dHidden);
    let prev = BOS;
    const outIds: number[] = [];
    for (let t = 0; t < this.config.maxDecodeLen; t++) {
      const step = this.decodeStep(tape, states, h, context, prev);
      h = step.h;
      context = step.context;
      let best = 0;
      const logits = step.logits.data;
      for (let j = 1; j < logits.length; j++) if (logits[j] > logits[best]) best = j;
      if (best === 1 /* EOS */) break;
      outIds.push(best);
      prev = best;
    }
    return outIds;
  }

  zeroGrads(): void {
    for (const p of this.params.values()) p.grad!.fill(0);
  }

  snapshot(): Record<string, number[]> {
    const out: Record<string, number[]> = {};
    for (const [name, p] of this.params) out[name] = [...p.data];
    return out;
  }

  saveCheckpoint(): string {
    return JSON.stringify({
      config: this.config,
      vocab: this.vocab.tokens,
      params: this.snapshot(),
    });
  }

  static loadCheckpoint(text: string): Model {
    const doc = JSON.parse(text) as {
      config: ModelConfig;
      vocab: string[];
      params: Record<string, number[]>;
    };
    const model = new Model(new Vocab(doc.vocab), doc.config, null);
    for (const [name, values] of Object.entries(doc.params)) {
      const p = model.params.get(name);
      if (!p || p.size !== values.length) throw new Error(`checkpoint mismatch at ${name}`);
      p.data.set(values);
    }
    return model;
  }
}

/** Adam with global-norm gradient clipping. */
export class Adam {
  private m: Map<string, Float64Array> = new Map();
  private v: Map<string, Float64Array> = new Map();
  private t = 0;

  constructor(
    private model: Model,
    private lr: number,
    private beta1 = 0.9,
    private beta2 = 0.999,
    private eps = 1e-8,
    private clip = 5.0,
  ) {
    for (const [name, p] of model.params) {
      this.m.set(name, new Float64Array(p.size));
      this.v.set(name, new Float64Array(p.size));
    }
  }

  step(): void {
    this.t += 1;
    let normSq = 0;
    for (const p of this.model.params.values()) {
      const g = p.grad!;
      for (let i = 0; i < g.length; i++) normSq += g[i] * g[i];
    }
    const norm = Math.sqrt(normSq);
    const scale = norm > this.clip ? this.clip / norm : 1.0;
    const bc1 = 1 - Math.pow(this.beta1, this.t);
    const bc2 = 1 - Math.pow(this.beta2, this.t);
    for (const [name, p] of this.model.params) {
      const m = this.m.get(name)!;
      const v = this.v.get(name)!;
      const g = p.grad!;
      for (let i = 0; i < p.size; i++) {
        const gi = g[i] * scale;
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * gi;
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * gi * gi;
        p.data[i] -= (this.lr * (m[i] / bc1)) / (Math.sqrt(v[i] / bc2) + this.eps);
      }
    }
  }
}
