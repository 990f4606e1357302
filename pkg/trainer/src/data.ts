/** Readers for sparqlkit's line-oriented file formats. */

import { readFileSync, writeFileSync } from "node:fs";

export interface PretrainPair {
  objective: string;
  input: string;
  target: string;
}

export interface FinetunePair {
  id: string;
  input: string;
  target: string;
}

export function readJsonl<T>(path: string): T[] {
  return readFileSync(path, "utf-8")
    .split("\n")
    .filter((line) => line.trim())
    .map((line) => JSON.parse(line) as T);
}

export function writeJsonl(path: string, rows: object[]): void {
  writeFileSync(path, rows.map((r) => JSON.stringify(r)).join("\n") + (rows.length ? "\n" : ""));
}

export function readLines(path: string): string[] {
  return readFileSync(path, "utf-8")
    .split("\n")
    .filter((line) => line.trim());
}

export function writeLines(path: string, lines: string[]): void {
  writeFileSync(path, lines.join("\n") + (lines.length ? "\n" : ""));
}
