/** Integration with the sparqlkit CLI: corpora in, decoded predictions out. */

import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import { readJsonl, writeJsonl, writeLines } from "../src/data.js";
import * as kit from "../src/kit.js";
import { Model, TINY } from "../src/model.js";
import { Rng } from "../src/rng.js";
import { generate, writeDataset } from "../src/synth.js";
import { buildVocab, decodeAll, finetune } from "../src/train.js";

const work = mkdtempSync(join(tmpdir(), "toy-trainer-"));
const dataset = generate(7, 300);
const paths = writeDataset(dataset, join(work, "data"));

describe("sparqlkit bridge", () => {
  it("raises CliUnavailable when the interpreter is missing", () => {
    const saved = process.env.SPARQLKIT_PYTHON;
    process.env.SPARQLKIT_PYTHON = "/nonexistent/python3";
    try {
      expect(() => kit.runKit(["parse-check", "-o", "-"], "ask where { }\n")).toThrow(
        kit.CliUnavailable,
      );
    } finally {
      if (saved === undefined) delete process.env.SPARQLKIT_PYTHON;
      else process.env.SPARQLKIT_PYTHON = saved;
    }
  });

  it("produces corruption pairs whose targets parse", () => {
    const pairsPath = join(work, "pairs.jsonl");
    kit.corrupt(paths.trainQueries, pairsPath, "mixed", 3, paths.labels);
    const pairs = readJsonl<{ objective: string; input: string; target: string }>(pairsPath);
    expect(pairs.length).toBe(2 * dataset.train.length);
    expect(new Set(pairs.map((p) => p.objective))).toEqual(new Set(["toc", "mlm"]));
    // verbalized: labels appear, raw entity IRIs do not
    expect(pairs.some((p) => p.target.includes("wd:alice") || p.target.includes("wd:paris"))).toBe(true);
    expect(pairs.every((p) => !/wd:Q\d/.test(p.target))).toBe(true);
  });

  it("builds fine-tuning pairs in the segmented input format", () => {
    const ftPath = join(work, "ft.jsonl");
    kit.buildFinetune(paths.train, ftPath, paths.labels);
    const rows = readJsonl<{ id: string; input: string; target: string }>(ftPath);
    expect(rows.length).toBe(dataset.train.length);
    for (const row of rows.slice(0, 20)) {
      expect(row.input.split("|").length).toBe(3);
      expect(row.target.startsWith("select") || row.target.startsWith("ask")).toBe(true);
    }
  });

  it("scores identical predictions at query-match 1.0", () => {
    const records = dataset.test.slice(0, 10).map((e) => ({
      id: e.id,
      predicted_query: e.query,
      gold_query: e.query,
    }));
    const recordsPath = join(work, "identical.jsonl");
    writeJsonl(recordsPath, records);
    const report = kit.evaluate(recordsPath, join(work, "identical.out.jsonl"), join(work, "identical.report.json"));
    expect(report.qm_rate).toBe(1.0);
    expect(report.error_counts.correct).toBe(10);
  });
});

describe("toy model through the pipeline", () => {
  const ftPath = join(work, "ft-train.jsonl");
  kit.buildFinetune(paths.train, ftPath, paths.labels);
  const pairs = readJsonl<{ id: string; input: string; target: string }>(ftPath);

  it("memorizes a single example to query-match 1.0", () => {
    const one = pairs.slice(0, 1);
    const vocab = buildVocab(one.flatMap((p) => [p.input, p.target]));
    const model = new Model(vocab, TINY, new Rng(2));
    finetune(model, one, {
      model: TINY, epochs: 120, batchSize: 1, learningRate: 4e-3, seed: 2, lossMix: "sum",
    });
    const [decoded] = decodeAll(model, [one[0].input]);
    expect(decoded).toBe(one[0].target);

    // verify through the evaluator, after deverbalizing the prediction
    const decodedPath = join(work, "one.decoded.txt");
    writeLines(decodedPath, [decoded]);
    const deverbPath = join(work, "one.deverb.txt");
    kit.deverbalizeFile(decodedPath, deverbPath, paths.labels);
    const executable = readFileSync(deverbPath, "utf-8").trim();
    const gold = dataset.train.find((e) => e.id === one[0].id)!.query;
    const recordsPath = join(work, "one.records.jsonl");
    writeJsonl(recordsPath, [{ id: one[0].id, predicted_query: executable, gold_query: gold }]);
    const report = kit.evaluate(recordsPath, join(work, "one.out.jsonl"), join(work, "one.report.json"));
    expect(report.qm_rate).toBe(1.0);
  }, 120_000);

  it("decoded outputs deverbalize cleanly through the CLI", () => {
    const sample = pairs.slice(0, 8);
    const vocab = buildVocab(sample.flatMap((p) => [p.input, p.target]));
    const model = new Model(vocab, TINY, new Rng(3));
    // a briefly trained model produces rough but tokenizable output
    finetune(model, sample, {
      model: TINY, epochs: 3, batchSize: 4, learningRate: 4e-3, seed: 3, lossMix: "sum",
    });
    const decoded = decodeAll(model, sample.map((p) => p.input));
    const decodedPath = join(work, "rough.decoded.txt");
    writeLines(decodedPath, decoded.map((d) => d || "ask where { }"));
    const deverbPath = join(work, "rough.deverb.txt");
    kit.deverbalizeFile(decodedPath, deverbPath, paths.labels);
    const out = readFileSync(deverbPath, "utf-8").split("\n").filter((l) => l.length);
    expect(out.length).toBe(decoded.length);
    // every verbalized entity got mapped back to its IRI form
    for (const line of out) {
      expect(/wd:(alice|paris|acme|france)\b/.test(line)).toBe(false);
    }
  }, 120_000);
});

afterAll(() => {
  // temp dir is left for postmortem inspection when tests fail locally
});
