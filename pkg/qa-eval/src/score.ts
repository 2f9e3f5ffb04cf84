/**
 * Response scoring.
 *
 * A generation counts as correct when the canonical object string occurs
 * anywhere inside it after case folding and whitespace normalization.
 * Plain substring containment is deliberate: "Budapester" contains
 * "budapest". Word-boundary rules belong to the corpus scanner, not here.
 */

import { EvalError } from "./types.js";

export function normalize(text: string): string {
  return text
    .toLowerCase()
    .normalize("NFC")
    .split(/\s+/)
    .filter(Boolean)
    .join(" ");
}

export function scoreResponse(text: string, objectText: string): boolean {
  const needle = normalize(objectText);
  if (!needle) {
    throw new EvalError("object string normalizes to nothing, cannot score against it");
  }
  return normalize(text).includes(needle);
}
