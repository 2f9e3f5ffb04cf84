/**
 * Shared types for the QA evaluation harness.
 */

export interface Triple {
  tripleId: string;
  relation: string;
  subject: string;
  object: string;
}

/** Relation name to list of prompt templates, each containing "[S]" exactly once. */
export type TemplateMap = Record<string, string[]>;

export interface EvalConfig {
  endpoint: string;
  modelName: string;
  temperature: number;
  maxNewTokens: number;
  repeats: number;
  concurrency: number;
  timeoutMs: number;
  maxAttempts: number;
  seed?: number;
}

export const DEFAULTS = {
  temperature: 0.7,
  maxNewTokens: 32,
  repeats: 20,
  concurrency: 8,
  timeoutMs: 30_000,
  maxAttempts: 3,
} as const;

/** One scored generation. */
export interface ResponseRecord {
  tripleId: string;
  templateIndex: number;
  repeatIndex: number;
  text: string;
  correct: boolean;
}

/** Aggregated result for one triple. Failed requests are excluded from the denominator. */
export interface TripleAccuracy {
  tripleId: string;
  accuracy: number;
  nResponses: number;
  nFailures: number;
}

/** Bad input data, unusable endpoint responses, or an unevaluable triple. */
export class EvalError extends Error {}

/** Bad command-line usage. */
export class UsageError extends Error {}
