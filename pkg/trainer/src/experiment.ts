/**
 * Pretrained-vs-scratch study.
 *
 * For each seed: generate corruption and fine-tuning corpora through the
 * sparqlkit CLI, pretrain a tiny model (TOC+MLM sum objective), then
 * fine-tune two twins from the same initialization - one from the
 * pretrained checkpoint, one from scratch - and score both on the test
 * split (query match + triplet error classes, again through the CLI).
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { FinetunePair, PretrainPair, readJsonl, writeJsonl, writeLines } from "./data.js";
import * as kit from "./kit.js";
import { Model, TINY } from "./model.js";
import { Rng } from "./rng.js";
import { SynthExample, generate, writeDataset } from "./synth.js";
import { DEFAULT_TRAIN, TrainConfig, buildVocab, decodeAll, finetune, pretrain } from "./train.js";
import { Vocab } from "./vocab.js";

export interface ExperimentConfig {
  outDir: string;
  seeds: number[];
  datasetSeed: number;
  datasetSize: number;
  pretrainEpochs: number;
  finetuneEpochs: number;
  batchSize: number;
  learningRate: number;
  devQmThreshold: number;
}

export const DEFAULT_EXPERIMENT: ExperimentConfig = {
  outDir: "runs/experiment",
  seeds: [1, 2, 3],
  datasetSeed: 0,
  datasetSize: 2000,
  pretrainEpochs: 6,
  finetuneEpochs: 6,
  batchSize: 16,
  learningRate: 2e-3,
  devQmThreshold: 0.6,
};

export interface ArmResult {
  qmRate: number;
  macroF1: number;
  tripletFlips: number;
  tripletErrors: number;
  errorCounts: Record<string, number>;
  devQmByEpoch: number[];
  epochsToThreshold: number | null;
}

export interface SeedResult {
  seed: number;
  pretrained: ArmResult;
  scratch: ArmResult;
}

export interface ExperimentReport {
  config: ExperimentConfig;
  seeds: SeedResult[];
  flipWins: number;
  qmPretrainedMean: number;
  qmScratchMean: number;
  passed: boolean;
  wallTimeS: number;
}

/**
 * Verbalize the IRIs inside fine-tuning inputs (targets already are), so an
 * entity has one surface form on both sides and copying is pure retrieval.
 * Goes through the CLI on a plain line file, like everything else.
 */
export function verbalizeFinetuneInputs(ftPath: string, labelsPath: string, workPath: string): void {
  const rows = readJsonl<FinetunePair>(ftPath);
  const rawInputs = join(workPath, "inputs.raw.txt");
  writeLines(rawInputs, rows.map((r) => r.input));
  const verbInputs = join(workPath, "inputs.verb.txt");
  kit.runKit(["verbalize", "--labels", labelsPath, rawInputs, "-o", verbInputs]);
  const verbalized = readFileSync(verbInputs, "utf-8").split("\n");
  writeJsonl(
    ftPath,
    rows.map((r, i) => ({ ...r, input: verbalized[i] ?? r.input })),
  );
}

/** Decode -> deverbalize (CLI) -> evaluate + classify (CLI). */
export function scorePredictions(
  model: Model,
  pairs: FinetunePair[],
  examples: SynthExample[],
  labelsPath: string,
  workDir: string,
  tag: string,
): { report: kit.KitReport; flips: number } {
  mkdirSync(workDir, { recursive: true });
  const decoded = decodeAll(model, pairs.map((p) => p.input));
  const rawPath = join(workDir, `${tag}.decoded.txt`);
  writeLines(rawPath, decoded.length ? decoded : [""]);
  const deverbPath = join(workDir, `${tag}.deverbalized.txt`);
  kit.deverbalizeFile(rawPath, deverbPath, labelsPath);
  const executable = readLinesLoose(deverbPath, decoded.length);
  const gold = new Map(examples.map((e) => [e.id, e.query]));
  const records = pairs.map((p, i) => ({
    id: p.id,
    predicted_query: executable[i] ?? "",
    gold_query: gold.get(p.id) ?? "",
  }));
  const recordsPath = join(workDir, `${tag}.records.jsonl`);
  writeJsonl(recordsPath, records);
  const reportPath = join(workDir, `${tag}.report.json`);
  const report = kit.evaluate(recordsPath, join(workDir, `${tag}.results.jsonl`), reportPath);
  return { report, flips: report.error_counts["triplet-flip"] ?? 0 };
}

function readLinesLoose(path: string, expected: number): string[] {
  // deverbalize is line-to-line; keep blanks aligned
  return readFileSync(path, "utf-8").split("\n").slice(0, expected);
}

export function runExperiment(config: ExperimentConfig): ExperimentReport {
  const t0 = Date.now();
  const dataDir = join(config.outDir, "data");
  const dataset = generate(config.datasetSeed, config.datasetSize);
  const paths = writeDataset(dataset, dataDir);

  const results: SeedResult[] = [];
  for (const seed of config.seeds) {
    const seedDir = join(config.outDir, `seed-${seed}`);
    mkdirSync(seedDir, { recursive: true });

    // corpora via the primary CLI
    const pairsPath = join(seedDir, "pretrain.jsonl");
    kit.corrupt(paths.trainQueries, pairsPath, "mixed", seed, paths.labels);
    const ftTrain = join(seedDir, "finetune.train.jsonl");
    const ftDev = join(seedDir, "finetune.dev.jsonl");
    const ftTest = join(seedDir, "finetune.test.jsonl");
    kit.buildFinetune(paths.train, ftTrain, paths.labels);
    kit.buildFinetune(paths.dev, ftDev, paths.labels);
    kit.buildFinetune(paths.test, ftTest, paths.labels);
    for (const ft of [ftTrain, ftDev, ftTest]) {
      verbalizeFinetuneInputs(ft, paths.labels, seedDir);
    }

    const pretrainPairs = readJsonl<PretrainPair>(pairsPath);
    const trainPairs = readJsonl<FinetunePair>(ftTrain);
    const devPairs = readJsonl<FinetunePair>(ftDev);
    const testPairs = readJsonl<FinetunePair>(ftTest);

    const vocab = buildVocab([
      ...pretrainPairs.flatMap((p) => [p.input, p.target]),
      ...trainPairs.flatMap((p) => [p.input, p.target]),
    ]);

    const trainConfig: TrainConfig = {
      model: TINY,
      epochs: config.pretrainEpochs,
      batchSize: config.batchSize,
      learningRate: config.learningRate,
      seed,
      lossMix: "sum",
    };

    const { model: pretrained } = pretrain(pretrainPairs, trainConfig, vocab);
    writeFileSync(join(seedDir, "pretrained.ckpt.json"), pretrained.saveCheckpoint());
    // scratch twin: same architecture and initialization stream, no pretraining
    const scratch = new Model(vocab, TINY, new Rng(seed).fork(1));

    const arms: [string, Model][] = [
      ["pretrained", pretrained],
      ["scratch", scratch],
    ];
    const armResults: Record<string, ArmResult> = {};
    for (const [tag, model] of arms) {
      const devCurve: number[] = [];
      const ftConfig: TrainConfig = { ...trainConfig, epochs: config.finetuneEpochs };
      finetune(model, trainPairs, ftConfig, (epoch, m) => {
        const { report } = scorePredictions(
          m, devPairs, dataset.dev, paths.labels, join(seedDir, "dev"), `${tag}-e${epoch}`,
        );
        devCurve.push(report.qm_rate);
        return report.qm_rate;
      });
      const { report, flips } = scorePredictions(
        model, testPairs, dataset.test, paths.labels, join(seedDir, "test"), tag,
      );
      const reached = devCurve.findIndex((qm) => qm >= config.devQmThreshold);
      armResults[tag] = {
        qmRate: report.qm_rate,
        macroF1: report.macro_f1,
        tripletFlips: flips,
        tripletErrors: report.triplet_errors,
        errorCounts: report.error_counts,
        devQmByEpoch: devCurve,
        epochsToThreshold: reached === -1 ? null : reached + 1,
      };
    }
    results.push({ seed, pretrained: armResults.pretrained, scratch: armResults.scratch });
  }

  const flipWins = results.filter((r) => r.pretrained.tripletFlips < r.scratch.tripletFlips).length;
  const qmPretrainedMean = mean(results.map((r) => r.pretrained.qmRate));
  const qmScratchMean = mean(results.map((r) => r.scratch.qmRate));
  const report: ExperimentReport = {
    config,
    seeds: results,
    flipWins,
    qmPretrainedMean,
    qmScratchMean,
    passed: flipWins >= 2 && qmPretrainedMean >= qmScratchMean,
    wallTimeS: (Date.now() - t0) / 1000,
  };
  mkdirSync(config.outDir, { recursive: true });
  writeFileSync(join(config.outDir, "report.json"), JSON.stringify(report, null, 2));
  return report;
}

function mean(values: number[]): number {
  return values.length ? values.reduce((a, b) => a + b, 0) / values.length : 0;
}
