import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterEach, describe, expect, it, vi } from "vitest";

import { main, parseCli } from "../src/cli.js";
import { startMockServer, type MockServer } from "../src/mock-server.js";
import { writeAccuracy } from "../src/output.js";

let server: MockServer | undefined;

afterEach(async () => {
  await server?.close();
  server = undefined;
  vi.restoreAllMocks();
});

function workspace(): { dir: string; triples: string; templates: string; out: string } {
  const dir = mkdtempSync(join(tmpdir(), "qa-eval-cli-"));
  const triples = join(dir, "triples.tsv");
  writeFileSync(triples, "hq1\theadquartered_in\tCsepel SC\tBudapest\n");
  const templates = join(dir, "templates.json");
  writeFileSync(templates, JSON.stringify({ headquartered_in: ["Q0: [S] is based in", "Q1: find [S] in"] }));
  return { dir, triples, templates, out: join(dir, "accuracy.jsonl") };
}

describe("parseCli", () => {
  it("applies defaults", () => {
    const { config } = parseCli([
      "--endpoint", "http://x/v1", "--triples", "t.tsv", "--templates", "tpl.json",
      "--model-name", "m", "--out", "o.jsonl",
    ]);
    expect(config.temperature).toBe(0.7);
    expect(config.maxNewTokens).toBe(32);
    expect(config.repeats).toBe(20);
    expect(config.maxAttempts).toBe(3);
  });

  it("rejects unknown flags", () => {
    expect(() => parseCli(["--endpoint", "x", "--nope", "1"])).toThrow();
  });

  it("rejects a non-integer repeats", () => {
    expect(() =>
      parseCli([
        "--endpoint", "x", "--triples", "t", "--templates", "p",
        "--model-name", "m", "--out", "o", "--repeats", "2.5",
      ]),
    ).toThrow(/--repeats must be a positive integer/);
  });
});

describe("main", () => {
  it("returns 1 and prints usage when a required flag is missing", async () => {
    const errors: string[] = [];
    vi.spyOn(console, "error").mockImplementation((msg) => errors.push(String(msg)));
    expect(await main(["--endpoint", "http://x"])).toBe(1);
    expect(errors.join("\n")).toContain("missing required option --triples");
    expect(errors.join("\n")).toContain("usage: qa-eval");
  });

  it("returns 2 when templates do not cover a relation", async () => {
    const ws = workspace();
    writeFileSync(ws.templates, JSON.stringify({ other_relation: ["[S]?"] }));
    const errors: string[] = [];
    vi.spyOn(console, "error").mockImplementation((msg) => errors.push(String(msg)));
    const code = await main([
      "--endpoint", "http://127.0.0.1:1/v1", "--triples", ws.triples,
      "--templates", ws.templates, "--model-name", "m", "--out", ws.out,
    ]);
    expect(code).toBe(2);
    expect(errors.join("\n")).toContain("no templates for relations: headquartered_in");
  });

  it("runs end to end against a mock and writes row plus meta", async () => {
    server = await startMockServer(() => "Budapest");
    const ws = workspace();
    vi.spyOn(console, "error").mockImplementation(() => {});
    const code = await main([
      "--endpoint", server.url, "--triples", ws.triples, "--templates", ws.templates,
      "--model-name", "m", "--out", ws.out, "--repeats", "3", "--concurrency", "2",
    ]);
    expect(code).toBe(0);
    const row = JSON.parse(readFileSync(ws.out, "utf-8").trim());
    expect(row).toEqual({ triple_id: "hq1", model: "m", accuracy: 1.0, n_responses: 6, n_failures: 0 });
    const meta = JSON.parse(readFileSync(`${ws.out}.meta.json`, "utf-8"));
    expect(meta.n_requests).toBe(6);
    expect(typeof meta.created_at).toBe("string");
  });

  it("returns 2 when the endpoint never answers", async () => {
    const ws = workspace();
    vi.spyOn(console, "error").mockImplementation(() => {});
    const code = await main([
      "--endpoint", "http://127.0.0.1:1/v1", "--triples", ws.triples, "--templates", ws.templates,
      "--model-name", "m", "--out", ws.out, "--repeats", "1", "--max-attempts", "1",
    ]);
    expect(code).toBe(2);
  });
});

describe("writeAccuracy", () => {
  it("writes an empty file with a warning when there are no records", () => {
    const dir = mkdtempSync(join(tmpdir(), "qa-eval-out-"));
    const path = join(dir, "empty.jsonl");
    const errors: string[] = [];
    vi.spyOn(console, "error").mockImplementation((msg) => errors.push(String(msg)));
    writeAccuracy([], "m", path);
    expect(readFileSync(path, "utf-8")).toBe("");
    expect(errors.join("\n")).toContain("no accuracy records");
  });

  it("writes one JSON line per record in a stable key order", () => {
    const dir = mkdtempSync(join(tmpdir(), "qa-eval-out-"));
    const path = join(dir, "acc.jsonl");
    writeAccuracy(
      [
        { tripleId: "a", accuracy: 0.5, nResponses: 4, nFailures: 0 },
        { tripleId: "b", accuracy: 1.0, nResponses: 2, nFailures: 2 },
      ],
      "m",
      path,
    );
    expect(readFileSync(path, "utf-8")).toBe(
      '{"triple_id":"a","model":"m","accuracy":0.5,"n_responses":4,"n_failures":0}\n' +
      '{"triple_id":"b","model":"m","accuracy":1,"n_responses":2,"n_failures":2}\n',
    );
  });
});
