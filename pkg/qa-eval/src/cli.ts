#!/usr/bin/env node
/**
 * qa-eval: evaluate knowledge triples against a completion endpoint and
 * write per-triple accuracy JSONL for the analysis pipeline.
 */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { evaluateTriples } from "./evaluate.js";
import { writeAccuracy, writeMeta } from "./output.js";
import { loadTemplates, missingRelations } from "./templates.js";
import { loadTriples } from "./triples.js";
import { DEFAULTS, EvalError, UsageError, type EvalConfig } from "./types.js";

const USAGE =
  "usage: qa-eval --endpoint URL --triples FILE --templates FILE --model-name NAME --out FILE " +
  "[--repeats N] [--concurrency K] [--timeout-ms MS] [--max-attempts N] [--seed N]";

function positiveInt(name: string, raw: string): number {
  const value = Number(raw);
  if (!Number.isInteger(value) || value < 1) {
    throw new UsageError(`--${name} must be a positive integer, got ${JSON.stringify(raw)}`);
  }
  return value;
}

export function parseCli(argv: string[]): { config: EvalConfig; triplesPath: string; templatesPath: string; outPath: string } {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      strict: true,
      allowPositionals: false,
      options: {
        endpoint: { type: "string" },
        triples: { type: "string" },
        templates: { type: "string" },
        "model-name": { type: "string" },
        out: { type: "string" },
        repeats: { type: "string" },
        concurrency: { type: "string" },
        "timeout-ms": { type: "string" },
        "max-attempts": { type: "string" },
        seed: { type: "string" },
      },
    });
  } catch (error) {
    throw new UsageError((error as Error).message);
  }
  const values = parsed.values;
  for (const required of ["endpoint", "triples", "templates", "model-name", "out"] as const) {
    if (!values[required]) {
      throw new UsageError(`missing required option --${required}`);
    }
  }
  const config: EvalConfig = {
    endpoint: values.endpoint!,
    modelName: values["model-name"]!,
    temperature: DEFAULTS.temperature,
    maxNewTokens: DEFAULTS.maxNewTokens,
    repeats: values.repeats ? positiveInt("repeats", values.repeats) : DEFAULTS.repeats,
    concurrency: values.concurrency ? positiveInt("concurrency", values.concurrency) : DEFAULTS.concurrency,
    timeoutMs: values["timeout-ms"] ? positiveInt("timeout-ms", values["timeout-ms"]) : DEFAULTS.timeoutMs,
    maxAttempts: values["max-attempts"] ? positiveInt("max-attempts", values["max-attempts"]) : DEFAULTS.maxAttempts,
  };
  if (values.seed !== undefined) {
    config.seed = positiveInt("seed", values.seed);
  }
  return { config, triplesPath: values.triples!, templatesPath: values.templates!, outPath: values.out! };
}

export async function main(argv: string[]): Promise<number> {
  try {
    const { config, triplesPath, templatesPath, outPath } = parseCli(argv);
    const triples = loadTriples(triplesPath);
    const templates = loadTemplates(templatesPath);
    const missing = missingRelations(triples, templates);
    if (missing.length > 0) {
      throw new EvalError(`no templates for relations: ${missing.join(", ")}`);
    }
    const run = await evaluateTriples(config, triples, templates);
    writeAccuracy(run.records, config.modelName, outPath);
    writeMeta(`${outPath}.meta.json`, config, {
      nTriples: triples.length,
      nRequests: run.nRequests,
      nFailures: run.nFailures,
    }, run.backend);
    console.error(
      `evaluated ${triples.length} triples, ${run.nRequests} requests, ` +
      `${run.nFailures} failed -> ${outPath}`,
    );
    return 0;
  } catch (error) {
    if (error instanceof UsageError) {
      console.error(`error: ${error.message}`);
      console.error(USAGE);
      return 1;
    }
    if (error instanceof EvalError) {
      console.error(`error: ${error.message}`);
      return 2;
    }
    console.error(`internal error: ${(error as Error).stack ?? error}`);
    return 3;
  }
}

const invokedDirectly =
  typeof process.argv[1] === "string" && import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
