import { describe, expect, it } from "vitest";

import { Rng } from "../src/rng.js";
import { Tape, Tensor } from "../src/tensor.js";
import { Model } from "../src/model.js";
import { Vocab, BOS, EOS, UNK } from "../src/vocab.js";
import { EmptyCorpus, VocabularyOverflow, buildVocab, finetune, pretrain } from "../src/train.js";
import { generate } from "../src/synth.js";
import type { PretrainPair } from "../src/data.js";

const TINY_CFG = { dEmb: 8, dHidden: 10, maxDecodeLen: 16 };

describe("rng", () => {
  it("is deterministic per seed", () => {
    const a = new Rng(42);
    const b = new Rng(42);
    const seqA = Array.from({ length: 20 }, () => a.next());
    const seqB = Array.from({ length: 20 }, () => b.next());
    expect(seqA).toEqual(seqB);
    expect(new Rng(43).next()).not.toEqual(new Rng(42).next());
  });

  it("forks independent streams", () => {
    const base = new Rng(7);
    const f1 = base.fork(1);
    const f2 = base.fork(2);
    expect(f1.next()).not.toEqual(f2.next());
  });

  it("shuffle permutes in place deterministically", () => {
    const items = [...Array(10).keys()];
    const out = new Rng(5).shuffle([...items]);
    expect([...out].sort((x, y) => x - y)).toEqual(items);
    expect(new Rng(5).shuffle([...items])).toEqual(out);
  });
});

describe("vocab", () => {
  it("reserves specials and round-trips text", () => {
    const vocab = Vocab.build(["select ?x where", "ask where"]);
    expect(vocab.tokens.slice(0, 3)).toEqual(["<s>", "</s>", "<unk>"]);
    const ids = vocab.encode("select ?x where");
    expect(ids.at(-1)).toBe(EOS);
    expect(vocab.decode(ids)).toBe("select ?x where");
  });

  it("maps unknown words to UNK", () => {
    const vocab = Vocab.build(["a b"]);
    expect(vocab.encode("a zzz", false)).toEqual([vocab.encode("a", false)[0], UNK]);
  });
});

describe("autograd", () => {
  it("matches finite differences through the full model loss", () => {
    const vocab = new Vocab(["<s>", "</s>", "<unk>", "a", "b", "c"]);
    const model = new Model(vocab, TINY_CFG, new Rng(3));
    const input = [3, 4, 5];
    const target = [5, 3, 1];
    const value = () => {
      const tape = new Tape();
      tape.active = false;
      return model.exampleLoss(tape, input, target).loss.data[0];
    };
    model.zeroGrads();
    const tape = new Tape();
    tape.backward(model.exampleLoss(tape, input, target).loss);
    const eps = 1e-5;
    let checked = 0;
    for (const [, p] of model.params) {
      for (let i = 0; i < Math.min(3, p.size); i++) {
        const orig = p.data[i];
        p.data[i] = orig + eps;
        const up = value();
        p.data[i] = orig - eps;
        const down = value();
        p.data[i] = orig;
        const numeric = (up - down) / (2 * eps);
        const analytic = p.grad![i];
        const scale = Math.max(1e-4, Math.abs(numeric) + Math.abs(analytic));
        expect(Math.abs(numeric - analytic) / scale).toBeLessThan(1e-3);
        checked++;
      }
    }
    expect(checked).toBeGreaterThan(30);
  });
});

function toyPairs(): PretrainPair[] {
  const queries = [
    "select ?x where { ?x wdt:p wd:a }",
    "select ?x where { wd:b wdt:p ?x }",
    "ask where { wd:a wdt:q wd:b }",
    "select ?y where { ?y wdt:q wd:c }",
  ];
  const pairs: PretrainPair[] = [];
  for (const q of queries) {
    pairs.push({ objective: "toc", input: q, target: q });
    pairs.push({ objective: "mlm", input: q.replace("where", "<extra_id_0>"), target: "<extra_id_0> where <extra_id_1>" });
  }
  return pairs;
}

describe("training loops", () => {
  it("sum-mode log equals the sum of per-objective losses", () => {
    const { logs } = pretrain(toyPairs(), {
      model: TINY_CFG, epochs: 3, batchSize: 2, learningRate: 1e-3, seed: 9, lossMix: "sum",
    });
    expect(logs.length).toBeGreaterThan(0);
    for (const log of logs) {
      expect(log.tocLoss).toBeDefined();
      expect(log.mlmLoss).toBeDefined();
      const sum = log.tocLoss! + log.mlmLoss!;
      expect(Math.abs(log.loss - sum)).toBeLessThanOrEqual(1e-5 * Math.abs(sum));
    }
  });

  it("single-objective modes train on one pool", () => {
    const { logs } = pretrain(toyPairs(), {
      model: TINY_CFG, epochs: 2, batchSize: 2, learningRate: 1e-3, seed: 9, lossMix: "toc_only",
    });
    expect(logs.every((l) => l.tocLoss === undefined)).toBe(true);
    expect(logs.every((l) => l.loss > 0)).toBe(true);
  });

  it("zero-epoch finetune leaves the checkpoint at initialization", () => {
    const vocab = buildVocab(["a b c"]);
    const model = new Model(vocab, TINY_CFG, new Rng(4));
    const before = model.snapshot();
    finetune(model, [{ id: "1", input: "a", target: "b" }], {
      model: TINY_CFG, epochs: 0, batchSize: 1, learningRate: 1e-2, seed: 1, lossMix: "sum",
    });
    expect(model.snapshot()).toEqual(before);
  });

  it("loss decreases monotonically early on a single example", () => {
    const vocab = buildVocab(["a b c d"]);
    const model = new Model(vocab, TINY_CFG, new Rng(4));
    const { logs } = finetune(model, [{ id: "1", input: "a b", target: "c d" }], {
      model: TINY_CFG, epochs: 8, batchSize: 1, learningRate: 5e-3, seed: 1, lossMix: "sum",
    });
    for (let i = 1; i < logs.length; i++) {
      expect(logs[i].loss).toBeLessThan(logs[i - 1].loss);
    }
    expect(logs.every((l) => l.loss >= 0)).toBe(true);
  });

  it("rejects empty corpora and oversized vocabularies", () => {
    expect(() =>
      pretrain([], { model: TINY_CFG, epochs: 1, batchSize: 1, learningRate: 1e-3, seed: 1, lossMix: "sum" }),
    ).toThrow(EmptyCorpus);
    const words = Array.from({ length: 5000 }, (_, i) => `w${i}`).join(" ");
    expect(() => buildVocab([words])).toThrow(VocabularyOverflow);
  });
});

describe("checkpoints", () => {
  it("round-trips params and vocab through JSON", () => {
    const vocab = buildVocab(["select ?x where { ?x wdt:p wd:a }"]);
    const model = new Model(vocab, TINY_CFG, new Rng(11));
    const reloaded = Model.loadCheckpoint(model.saveCheckpoint());
    expect(reloaded.vocab.tokens).toEqual(model.vocab.tokens);
    expect(reloaded.snapshot()).toEqual(model.snapshot());
    const input = vocab.encode("select ?x", false);
    expect(reloaded.greedyDecode(input)).toEqual(model.greedyDecode(input));
  });
});

describe("synthetic dataset", () => {
  it("is deterministic and split correctly", () => {
    const a = generate(0, 400);
    const b = generate(0, 400);
    expect(a).toEqual(b);
    const total = a.train.length + a.dev.length + a.test.length;
    expect(total).toBe(400);
    expect(a.train.length).toBe(280);
    const ids = new Set([...a.train, ...a.dev, ...a.test].map((e) => e.id));
    expect(ids.size).toBe(total);
  });

  it("produces well-formed records with 1-3 triples", () => {
    const data = generate(1, 300);
    for (const ex of [...data.train, ...data.dev, ...data.test]) {
      expect(ex.query).toContain("where {");
      expect(ex.entities.length).toBeGreaterThan(0);
      expect(ex.relations.length).toBeGreaterThan(0);
      const triples = ex.query.split(" . ").length;
      expect(triples).toBeGreaterThanOrEqual(1);
      expect(triples).toBeLessThanOrEqual(3);
      for (const [iri] of ex.entities) expect(ex.query).toContain(iri);
      for (const [iri] of ex.relations) expect(ex.query).toContain(iri);
    }
  });

  it("different seeds give different samples", () => {
    const a = generate(0, 500);
    const b = generate(2, 500);
    expect(a.train.map((e) => e.question)).not.toEqual(b.train.map((e) => e.question));
  });
});
