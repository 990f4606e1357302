/** Command-line front-end: synth | pretrain | finetune | decode | evaluate | experiment. */

import { readFileSync, writeFileSync } from "node:fs";

import { FinetunePair, PretrainPair, readJsonl, writeLines } from "./data.js";
import { DEFAULT_EXPERIMENT, runExperiment, scorePredictions } from "./experiment.js";
import { Model, TINY } from "./model.js";
import { Rng } from "./rng.js";
import { generate, writeDataset } from "./synth.js";
import { DEFAULT_TRAIN, LossMix, TrainConfig, buildVocab, decodeAll, finetune, pretrain } from "./train.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    if (argv[i].startsWith("--")) {
      const key = argv[i].slice(2);
      const value = i + 1 < argv.length && !argv[i + 1].startsWith("--") ? argv[++i] : "true";
      flags.set(key, value);
    }
  }
  return flags;
}

function trainConfig(flags: Map<string, string>): TrainConfig {
  return {
    model: TINY,
    epochs: Number(flags.get("epochs") ?? DEFAULT_TRAIN.epochs),
    batchSize: Number(flags.get("batch") ?? DEFAULT_TRAIN.batchSize),
    learningRate: Number(flags.get("lr") ?? DEFAULT_TRAIN.learningRate),
    seed: Number(flags.get("seed") ?? DEFAULT_TRAIN.seed),
    lossMix: (flags.get("loss-mix") ?? "sum") as LossMix,
  };
}

function main(argv: string[]): number {
  const [command, ...rest] = argv;
  const flags = parseFlags(rest);
  const need = (name: string): string => {
    const v = flags.get(name);
    if (!v) throw new Error(`missing --${name}`);
    return v;
  };

  switch (command) {
    case "synth": {
      const dataset = generate(Number(flags.get("seed") ?? 0), Number(flags.get("size") ?? 2000));
      const paths = writeDataset(dataset, need("out"));
      console.log(JSON.stringify({ sizes: {
        train: dataset.train.length, dev: dataset.dev.length, test: dataset.test.length,
      }, paths }, null, 2));
      return 0;
    }
    case "pretrain": {
      const pairs = readJsonl<PretrainPair>(need("pairs"));
      const config = trainConfig(flags);
      const logPath = flags.get("log");
      const logs: object[] = [];
      const { model, logs: allLogs } = pretrain(pairs, config, undefined, (log) => logs.push(log));
      writeFileSync(need("out"), model.saveCheckpoint());
      if (logPath) writeFileSync(logPath, JSON.stringify(allLogs));
      console.log(`pretrained on ${pairs.length} pairs, final loss ${allLogs.at(-1)?.loss.toFixed(4)}`);
      return 0;
    }
    case "finetune": {
      const data = readJsonl<FinetunePair>(need("data"));
      const config = trainConfig(flags);
      const init = flags.get("init");
      const model = init
        ? Model.loadCheckpoint(readFileSync(init, "utf-8"))
        : new Model(
            buildVocab(data.flatMap((p) => [p.input, p.target])),
            TINY,
            new Rng(config.seed),
          );
      const { logs } = finetune(model, data, config);
      writeFileSync(need("out"), model.saveCheckpoint());
      console.log(`fine-tuned on ${data.length} pairs, final loss ${logs.at(-1)?.loss.toFixed(4)}`);
      return 0;
    }
    case "decode": {
      const model = Model.loadCheckpoint(readFileSync(need("model"), "utf-8"));
      const data = readJsonl<FinetunePair>(need("data"));
      writeLines(need("out"), decodeAll(model, data.map((p) => p.input)));
      return 0;
    }
    case "evaluate": {
      const model = Model.loadCheckpoint(readFileSync(need("model"), "utf-8"));
      const pairs = readJsonl<FinetunePair>(need("data"));
      const examples = readJsonl<{ id: string; query: string }>(need("gold"));
      const { report } = scorePredictions(
        model,
        pairs,
        examples.map((e) => ({ ...e, question: "", entities: [], relations: [] })),
        need("labels"),
        flags.get("workdir") ?? "runs/eval",
        flags.get("tag") ?? "eval",
      );
      console.log(JSON.stringify(report, null, 2));
      return 0;
    }
    case "experiment": {
      const config = {
        ...DEFAULT_EXPERIMENT,
        outDir: flags.get("out") ?? DEFAULT_EXPERIMENT.outDir,
        seeds: (flags.get("seeds") ?? "1,2,3").split(",").map(Number),
        datasetSize: Number(flags.get("size") ?? DEFAULT_EXPERIMENT.datasetSize),
        pretrainEpochs: Number(flags.get("pretrain-epochs") ?? DEFAULT_EXPERIMENT.pretrainEpochs),
        finetuneEpochs: Number(flags.get("finetune-epochs") ?? DEFAULT_EXPERIMENT.finetuneEpochs),
        batchSize: Number(flags.get("batch") ?? DEFAULT_EXPERIMENT.batchSize),
        learningRate: Number(flags.get("lr") ?? DEFAULT_EXPERIMENT.learningRate),
      };
      const report = runExperiment(config);
      const fmt = report.seeds
        .map(
          (s) =>
            `seed ${s.seed}: flips ${s.pretrained.tripletFlips} vs ${s.scratch.tripletFlips}, ` +
            `qm ${s.pretrained.qmRate.toFixed(3)} vs ${s.scratch.qmRate.toFixed(3)}`,
        )
        .join("\n");
      console.log(fmt);
      console.log(
        `flip wins ${report.flipWins}/${report.seeds.length}, ` +
        `qm mean ${report.qmPretrainedMean.toFixed(3)} vs ${report.qmScratchMean.toFixed(3)}, ` +
        `passed=${report.passed}, ${report.wallTimeS.toFixed(0)}s`,
      );
      return report.passed ? 0 : 1;
    }
    default:
      console.error(
        "usage: cli <synth|pretrain|finetune|decode|evaluate|experiment> [--flags]",
      );
      return 1;
  }
}

process.exit(main(process.argv.slice(2)));
