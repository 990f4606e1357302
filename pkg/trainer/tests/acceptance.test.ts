/**
 * Secondary acceptance: directional replication at desk scale plus loss
 * bookkeeping and TOC reconstruction. Run with `npm run acceptance`
 * (excluded from the default `npm test` because the directional study
 * trains twelve models).
 */

import { appendFileSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { readJsonl, writeLines } from "../src/data.js";
import { DEFAULT_EXPERIMENT, runExperiment } from "../src/experiment.js";
import * as kit from "../src/kit.js";
import { generate, writeDataset } from "../src/synth.js";
import { TINY } from "../src/model.js";
import { buildVocab, decodeAll, pretrain } from "../src/train.js";
import type { PretrainPair } from "../src/data.js";

const work = mkdtempSync(join(tmpdir(), "toy-acceptance-"));

describe("secondary acceptance", () => {
  it("loss bookkeeping: sum-mode loss equals toc + mlm within 1e-5 relative", () => {
    const dataset = generate(11, 400);
    const paths = writeDataset(dataset, join(work, "bookkeeping"));
    const pairsPath = join(work, "bookkeeping", "pairs.jsonl");
    kit.corrupt(paths.trainQueries, pairsPath, "mixed", 5, paths.labels);
    const pairs = readJsonl<PretrainPair>(pairsPath).slice(0, 128);
    const { logs } = pretrain(pairs, {
      model: TINY, epochs: 2, batchSize: 16, learningRate: 2e-3, seed: 5, lossMix: "sum",
    });
    expect(logs.length).toBeGreaterThan(3);
    for (const log of logs) {
      const sum = log.tocLoss! + log.mlmLoss!;
      expect(Math.abs(log.loss - sum)).toBeLessThanOrEqual(1e-5 * Math.abs(sum));
    }
    console.log(`[PASS] loss bookkeeping over ${logs.length} steps`);
  }, 300_000);

  it("TOC reconstruction: >= 0.9 exact match on freshly corrupted copies of 50 training queries", () => {
    const dataset = generate(21, 400);
    const dir = join(work, "tocfit");
    const paths = writeDataset(dataset, dir);
    const fifty = join(dir, "fifty.txt");
    writeLines(fifty, dataset.train.slice(0, 50).map((e) => e.query));

    // several corruption draws per query approximate fresh corruption per epoch
    const corpusPath = join(dir, "toc-pairs.jsonl");
    writeLines(corpusPath, []);
    for (let draw = 1; draw <= 10; draw++) {
      const part = join(dir, `part-${draw}.jsonl`);
      kit.corrupt(fifty, part, "toc", draw, paths.labels);
      appendFileSync(corpusPath, readFileSync(part, "utf-8"));
    }
    const pairs = readJsonl<PretrainPair>(corpusPath);
    expect(pairs.length).toBe(500);

    const { model } = pretrain(pairs, {
      model: TINY, epochs: 24, batchSize: 16, learningRate: 3e-3, seed: 1, lossMix: "toc_only",
    });

    // held out: a corruption seed the model never saw
    const heldOut = join(dir, "heldout.jsonl");
    kit.corrupt(fifty, heldOut, "toc", 99, paths.labels);
    const held = readJsonl<PretrainPair>(heldOut);
    const decoded = decodeAll(model, held.map((p) => p.input));
    const exact = decoded.filter((d, i) => d === held[i].target).length / held.length;
    console.log(`[${exact >= 0.9 ? "PASS" : "FAIL"}] TOC reconstruction exact match ${exact.toFixed(3)}`);
    expect(exact).toBeGreaterThanOrEqual(0.9);

    // identity-corrupted input reproduces itself after convergence
    const identity = decodeAll(model, held.map((p) => p.target));
    const idExact = identity.filter((d, i) => d === held[i].target).length / held.length;
    expect(idExact).toBeGreaterThanOrEqual(0.9);
  }, 600_000);

  it("directional study: pretrained twin beats scratch on triplet flips in >= 2 of 3 seeds, QM no worse", () => {
    const report = runExperiment({
      ...DEFAULT_EXPERIMENT,
      outDir: join(work, "experiment"),
    });
    for (const seed of report.seeds) {
      console.log(
        `seed ${seed.seed}: flips ${seed.pretrained.tripletFlips} vs ${seed.scratch.tripletFlips}, ` +
          `qm ${seed.pretrained.qmRate.toFixed(3)} vs ${seed.scratch.qmRate.toFixed(3)}, ` +
          `dev-qm epochs-to-${DEFAULT_EXPERIMENT.devQmThreshold}: ` +
          `${seed.pretrained.epochsToThreshold ?? "never"} vs ${seed.scratch.epochsToThreshold ?? "never"}`,
      );
    }
    console.log(
      `[${report.passed ? "PASS" : "FAIL"}] flip wins ${report.flipWins}/3, ` +
        `qm mean ${report.qmPretrainedMean.toFixed(3)} vs ${report.qmScratchMean.toFixed(3)}, ` +
        `${report.wallTimeS.toFixed(0)}s`,
    );
    expect(report.flipWins).toBeGreaterThanOrEqual(2);
    expect(report.qmPretrainedMean).toBeGreaterThanOrEqual(report.qmScratchMean);
    expect(report.wallTimeS).toBeLessThan(30 * 60);
  }, 2_100_000);
});
