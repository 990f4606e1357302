/**
 * Subprocess bridge to the sparqlkit CLI. The trainer talks to the primary
 * toolkit only through this interface and its line-oriented file formats.
 */

import { spawnSync } from "node:child_process";
import { readFileSync } from "node:fs";

export class CliUnavailable extends Error {}

const python = () => process.env.SPARQLKIT_PYTHON ?? "python3";

export function runKit(args: string[], stdin = ""): { stdout: string; stderr: string; code: number } {
  const proc = spawnSync(python(), ["-m", "sparqlkit", ...args], {
    input: stdin,
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error || proc.status === null) {
    throw new CliUnavailable(
      `cannot run ${python()} -m sparqlkit: ${proc.error?.message ?? "no exit status"}`,
    );
  }
  if (proc.status !== 0 && proc.status !== 2) {
    throw new CliUnavailable(
      `sparqlkit ${args[0]} exited ${proc.status}: ${proc.stderr.slice(0, 500)}`,
    );
  }
  return { stdout: proc.stdout, stderr: proc.stderr, code: proc.status };
}

export interface KitReport {
  n: number;
  qm_rate: number;
  macro_f1: number;
  error_counts: Record<string, number>;
  triplet_errors: number;
}

export function corrupt(input: string, output: string, objective: string, seed: number, labels?: string): void {
  const args = ["corrupt", "--objective", objective, "--seed", String(seed), input, "-o", output];
  if (labels) args.push("--labels", labels);
  runKit(args);
}

export function buildFinetune(input: string, output: string, labels: string, scenario = "gold-both"): void {
  runKit(["build-finetune", "--scenario", scenario, "--labels", labels, input, "-o", output]);
}

export function deverbalizeFile(input: string, output: string, labels: string): void {
  runKit(["deverbalize", "--labels", labels, input, "-o", output]);
}

export function classifyErrors(records: string, output: string, report: string): KitReport {
  runKit(["classify-errors", records, "-o", output, "--report", report]);
  return readReport(report);
}

export function evaluate(records: string, output: string, report: string, mode = "ast"): KitReport {
  runKit(["evaluate", "--mode", mode, records, "-o", output, "--report", report]);
  return readReport(report);
}

function readReport(path: string): KitReport {
  return JSON.parse(readFileSync(path, "utf-8")) as KitReport;
}
