/**
 * Output files.
 *
 * The accuracy JSONL matches what the analysis pipeline loads: one object
 * per line with triple_id, model, accuracy, n_responses. Rows carry
 * n_failures as an extra field; the loader ignores it. Run settings and
 * backend-reported defaults go to a sibling .meta.json, never into the
 * accuracy rows.
 */

import { writeFileSync } from "node:fs";

import type { EvalConfig, TripleAccuracy } from "./types.js";

export function writeAccuracy(records: TripleAccuracy[], modelName: string, path: string): void {
  if (records.length === 0) {
    console.error(`warning: no accuracy records, writing empty file ${path}`);
    writeFileSync(path, "");
    return;
  }
  const lines = records.map((record) =>
    JSON.stringify({
      triple_id: record.tripleId,
      model: modelName,
      accuracy: record.accuracy,
      n_responses: record.nResponses,
      n_failures: record.nFailures,
    }),
  );
  writeFileSync(path, lines.join("\n") + "\n");
}

export function writeMeta(
  path: string,
  config: EvalConfig,
  stats: { nTriples: number; nRequests: number; nFailures: number },
  backend: Record<string, unknown>,
): void {
  const meta = {
    model: config.modelName,
    endpoint: config.endpoint,
    temperature: config.temperature,
    max_new_tokens: config.maxNewTokens,
    repeats: config.repeats,
    concurrency: config.concurrency,
    ...(config.seed !== undefined ? { seed: config.seed } : {}),
    n_triples: stats.nTriples,
    n_requests: stats.nRequests,
    n_failures: stats.nFailures,
    backend_defaults: backend,
    created_at: new Date().toISOString(),
  };
  writeFileSync(path, JSON.stringify(meta, null, 2) + "\n");
}
