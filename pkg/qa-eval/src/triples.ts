/**
 * Triple file loading.
 *
 * Accepts the same two on-disk shapes the counting pipeline writes:
 * 4-column headerless TSV (triple_id, relation, subject, object) for
 * ".tsv" paths, JSONL with those keys for anything else.
 */

import { readFileSync } from "node:fs";

import { EvalError, type Triple } from "./types.js";

function validateTriple(triple: Triple, origin: string): void {
  if (!triple.tripleId) throw new EvalError(`${origin}: triple with empty id`);
  if (!triple.subject) throw new EvalError(`${origin}: triple ${triple.tripleId} has an empty subject`);
  if (!triple.object) throw new EvalError(`${origin}: triple ${triple.tripleId} has an empty object`);
}

export function loadTriples(path: string): Triple[] {
  let raw: string;
  try {
    raw = readFileSync(path, "utf-8");
  } catch (error) {
    throw new EvalError(`cannot read triples file ${path} (${(error as Error).message})`);
  }
  const lines = raw.split("\n");
  const triples: Triple[] = [];
  const fromTsv = path.endsWith(".tsv");
  lines.forEach((line, i) => {
    const origin = `${path}:${i + 1}`;
    const trimmed = line.replace(/\r$/, "");
    if (!trimmed.trim()) return;
    if (fromTsv) {
      const cols = trimmed.split("\t");
      if (cols.length !== 4) {
        throw new EvalError(`${origin}: expected 4 tab-separated columns, got ${cols.length}`);
      }
      triples.push({ tripleId: cols[0]!, relation: cols[1]!, subject: cols[2]!, object: cols[3]! });
    } else {
      let obj: Record<string, unknown>;
      try {
        obj = JSON.parse(trimmed);
      } catch {
        throw new EvalError(`${origin}: malformed JSON line`);
      }
      for (const key of ["triple_id", "relation", "subject", "object"]) {
        if (!(key in obj)) throw new EvalError(`${origin}: triple record missing ${key}`);
      }
      triples.push({
        tripleId: String(obj["triple_id"]),
        relation: String(obj["relation"]),
        subject: String(obj["subject"]),
        object: String(obj["object"]),
      });
    }
  });
  if (triples.length === 0) {
    throw new EvalError(`${path}: no triples found`);
  }
  const seen = new Set<string>();
  for (const triple of triples) {
    validateTriple(triple, path);
    if (seen.has(triple.tripleId)) {
      throw new EvalError(`${path}: duplicate triple id ${JSON.stringify(triple.tripleId)}`);
    }
    seen.add(triple.tripleId);
  }
  return triples;
}
