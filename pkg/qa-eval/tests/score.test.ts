import { describe, expect, it } from "vitest";

import { normalize, scoreResponse } from "../src/score.js";
import { EvalError } from "../src/types.js";

describe("normalize", () => {
  it("folds case", () => {
    expect(normalize("BudaPEST")).toBe("budapest");
  });

  it("collapses runs of whitespace including newlines and tabs", () => {
    expect(normalize("  New \t York\n City ")).toBe("new york city");
  });

  it("composes combining sequences", () => {
    expect(normalize("São Paulo")).toBe("são paulo");
  });

  it("is idempotent", () => {
    const once = normalize("  MARIE   Skłodowska‑Curie \n");
    expect(normalize(once)).toBe(once);
  });
});

describe("scoreResponse", () => {
  it("accepts the object anywhere in the generation", () => {
    expect(scoreResponse("Its HQ is in Budapest, Hungary", "Budapest")).toBe(true);
  });

  it("rejects generations without the object", () => {
    expect(scoreResponse("I don't know", "Budapest")).toBe(false);
  });

  it("matches across case", () => {
    expect(scoreResponse("budapest", "Budapest")).toBe(true);
  });

  it("does not require word boundaries", () => {
    expect(scoreResponse("A true Budapester never says that", "Budapest")).toBe(true);
  });

  it("normalizes whitespace on both sides", () => {
    expect(scoreResponse("answer:  New\n  York", "New York")).toBe(true);
  });

  it("is deterministic", () => {
    for (let i = 0; i < 5; i++) {
      expect(scoreResponse("The answer is 42.", "42")).toBe(true);
      expect(scoreResponse("no idea", "42")).toBe(false);
    }
  });

  it("refuses an object that normalizes to nothing", () => {
    expect(() => scoreResponse("anything", "   ")).toThrow(EvalError);
  });
});
