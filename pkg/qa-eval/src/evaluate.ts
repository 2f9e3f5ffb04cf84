/**
 * Evaluation loop: render prompts, query the endpoint, score, aggregate.
 *
 * All requests across all triples go through one bounded worker pool, so
 * the endpoint sees at most `concurrency` in-flight requests regardless
 * of triple count. Aggregation is pure counting and therefore independent
 * of completion order. Per-triple records are assembled only after every
 * request has settled.
 */

import { queryModel } from "./client.js";
import { scoreResponse } from "./score.js";
import { renderPrompts } from "./templates.js";
import {
  EvalError,
  type EvalConfig,
  type ResponseRecord,
  type TemplateMap,
  type Triple,
  type TripleAccuracy,
} from "./types.js";

interface Job {
  triple: Triple;
  templateIndex: number;
  repeatIndex: number;
  prompt: string;
}

interface JobOutcome {
  job: Job;
  text?: string;
  failed: boolean;
}

export interface EvalRun {
  records: TripleAccuracy[];
  responses: ResponseRecord[];
  /** Extra fields from the first successful completion, e.g. backend defaults. */
  backend: Record<string, unknown>;
  nRequests: number;
  nFailures: number;
}

async function runPool<T, R>(items: T[], limit: number, worker: (item: T) => Promise<R>): Promise<R[]> {
  const results = new Array<R>(items.length);
  let next = 0;
  async function drain(): Promise<void> {
    while (next < items.length) {
      const index = next++;
      results[index] = await worker(items[index]!);
    }
  }
  const workers = Array.from({ length: Math.max(1, Math.min(limit, items.length)) }, drain);
  await Promise.all(workers);
  return results;
}

export async function evaluateTriples(
  config: EvalConfig,
  triples: Triple[],
  templates: TemplateMap,
): Promise<EvalRun> {
  if (config.repeats < 1) {
    throw new EvalError(`repeats must be >= 1, got ${config.repeats}`);
  }
  const jobs: Job[] = [];
  for (const triple of triples) {
    const prompts = renderPrompts(triple, templates);
    prompts.forEach((prompt, templateIndex) => {
      for (let repeatIndex = 0; repeatIndex < config.repeats; repeatIndex++) {
        jobs.push({ triple, templateIndex, repeatIndex, prompt });
      }
    });
  }

  let backend: Record<string, unknown> = {};
  let sawBackend = false;
  const outcomes = await runPool(jobs, config.concurrency, async (job): Promise<JobOutcome> => {
    try {
      const completion = await queryModel(config, job.prompt);
      if (!sawBackend) {
        sawBackend = true;
        backend = completion.backend;
      }
      return { job, text: completion.text, failed: false };
    } catch {
      return { job, failed: true };
    }
  });

  const records: TripleAccuracy[] = [];
  const responses: ResponseRecord[] = [];
  let nFailures = 0;
  for (const triple of triples) {
    const mine = outcomes.filter((o) => o.job.triple === triple);
    const failures = mine.filter((o) => o.failed).length;
    nFailures += failures;
    const answered = mine.length - failures;
    if (answered === 0) {
      throw new EvalError(`all ${mine.length} requests failed for triple ${triple.tripleId}`);
    }
    let correct = 0;
    for (const outcome of mine) {
      if (outcome.failed) continue;
      const ok = scoreResponse(outcome.text!, triple.object);
      if (ok) correct++;
      responses.push({
        tripleId: triple.tripleId,
        templateIndex: outcome.job.templateIndex,
        repeatIndex: outcome.job.repeatIndex,
        text: outcome.text!,
        correct: ok,
      });
    }
    records.push({
      tripleId: triple.tripleId,
      accuracy: correct / answered,
      nResponses: answered,
      nFailures: failures,
    });
  }
  return { records, responses, backend, nRequests: jobs.length, nFailures };
}

export async function evaluateTriple(
  config: EvalConfig,
  triple: Triple,
  templates: TemplateMap,
): Promise<TripleAccuracy> {
  const run = await evaluateTriples(config, [triple], templates);
  return run.records[0]!;
}
