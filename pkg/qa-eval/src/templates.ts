/**
 * Prompt template loading and rendering.
 *
 * Templates live in a JSON file mapping each relation name to a list of
 * prompt strings. Every template carries the subject placeholder "[S]"
 * exactly once.
 */

import { readFileSync } from "node:fs";

import { EvalError, type TemplateMap, type Triple } from "./types.js";

export const PLACEHOLDER = "[S]";

function placeholderCount(template: string): number {
  return template.split(PLACEHOLDER).length - 1;
}

export function loadTemplates(path: string): TemplateMap {
  let data: unknown;
  try {
    data = JSON.parse(readFileSync(path, "utf-8"));
  } catch (error) {
    throw new EvalError(`${path}: unreadable or invalid JSON (${(error as Error).message})`);
  }
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    throw new EvalError(`${path}: templates root must be an object`);
  }
  const map = data as Record<string, unknown>;
  if (Object.keys(map).length === 0) {
    throw new EvalError(`${path}: template map is empty`);
  }
  for (const [relation, prompts] of Object.entries(map)) {
    if (!Array.isArray(prompts) || prompts.length === 0) {
      throw new EvalError(`${path}: relation ${JSON.stringify(relation)} must map to a non-empty list`);
    }
    for (const prompt of prompts) {
      if (typeof prompt !== "string") {
        throw new EvalError(`${path}: relation ${JSON.stringify(relation)} has a non-string template`);
      }
      if (placeholderCount(prompt) !== 1) {
        throw new EvalError(
          `${path}: template ${JSON.stringify(prompt)} for relation ${JSON.stringify(relation)} ` +
          `must contain ${PLACEHOLDER} exactly once`,
        );
      }
    }
  }
  return map as TemplateMap;
}

/** One prompt per template, in template order. */
export function renderPrompts(triple: Triple, templates: TemplateMap): string[] {
  const prompts = templates[triple.relation];
  if (!prompts || prompts.length === 0) {
    throw new EvalError(`no templates for relation ${JSON.stringify(triple.relation)} (triple ${triple.tripleId})`);
  }
  return prompts.map((template) => {
    if (placeholderCount(template) !== 1) {
      throw new EvalError(`template ${JSON.stringify(template)} must contain ${PLACEHOLDER} exactly once`);
    }
    return template.replace(PLACEHOLDER, triple.subject);
  });
}

/** Relations used by triples but missing from the template map. */
export function missingRelations(triples: Triple[], templates: TemplateMap): string[] {
  const missing = new Set<string>();
  for (const triple of triples) {
    if (!(triple.relation in templates)) {
      missing.add(triple.relation);
    }
  }
  return [...missing].sort();
}
