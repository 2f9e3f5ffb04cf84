/**
 * Completion-endpoint client.
 *
 * Speaks a minimal completion-style wire format: POST the prompt plus
 * sampling settings as JSON, read the generated text back from
 * choices[0].text. Transient failures (timeouts, connection errors,
 * 408/429/5xx) are retried with exponential backoff up to a configured
 * attempt cap; anything else fails the request immediately.
 */

import { EvalError, type EvalConfig } from "./types.js";

export interface CompletionResult {
  text: string;
  /** Response fields other than choices, e.g. backend-reported sampling defaults. */
  backend: Record<string, unknown>;
}

const RETRYABLE_STATUS = new Set([408, 429, 500, 502, 503, 504]);
const BASE_DELAY_MS = 250;
const MAX_DELAY_MS = 4_000;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

function backoffDelay(attempt: number): number {
  const exp = Math.min(BASE_DELAY_MS * 2 ** attempt, MAX_DELAY_MS);
  return exp + Math.floor(Math.random() * 100);
}

function parseCompletion(payload: unknown): CompletionResult {
  if (typeof payload !== "object" || payload === null) {
    throw new EvalError("malformed API response: not a JSON object");
  }
  const { choices, ...backend } = payload as { choices?: unknown } & Record<string, unknown>;
  if (!Array.isArray(choices) || choices.length === 0) {
    throw new EvalError("malformed API response: missing choices");
  }
  const first = choices[0] as { text?: unknown };
  if (typeof first !== "object" || first === null || typeof first.text !== "string") {
    throw new EvalError("malformed API response: choices[0].text is not a string");
  }
  return { text: first.text, backend };
}

export async function queryModel(config: EvalConfig, prompt: string): Promise<CompletionResult> {
  const body: Record<string, unknown> = {
    model: config.modelName,
    prompt,
    temperature: config.temperature,
    max_tokens: config.maxNewTokens,
  };
  if (config.seed !== undefined) {
    body.seed = config.seed;
  }
  const payload = JSON.stringify(body);

  let lastError: Error = new EvalError("no attempts made");
  for (let attempt = 0; attempt < config.maxAttempts; attempt++) {
    if (attempt > 0) {
      await sleep(backoffDelay(attempt - 1));
    }
    let response: Response;
    try {
      response = await fetch(config.endpoint, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: payload,
        signal: AbortSignal.timeout(config.timeoutMs),
      });
    } catch (error) {
      // Connection refused, reset, or timed out: all transient.
      lastError = new EvalError(`request failed (${(error as Error).name}: ${(error as Error).message})`);
      continue;
    }
    if (!response.ok) {
      if (RETRYABLE_STATUS.has(response.status)) {
        lastError = new EvalError(`endpoint returned ${response.status}`);
        continue;
      }
      throw new EvalError(`endpoint returned ${response.status}: ${(await response.text()).slice(0, 200)}`);
    }
    let parsed: unknown;
    try {
      parsed = await response.json();
    } catch {
      throw new EvalError("malformed API response: body is not JSON");
    }
    return parseCompletion(parsed);
  }
  throw new EvalError(`exhausted ${config.maxAttempts} attempts: ${lastError.message}`);
}
