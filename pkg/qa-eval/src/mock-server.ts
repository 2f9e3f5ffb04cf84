/**
 * Scriptable completion endpoint for tests and dry runs.
 *
 * A responder decides each request's fate from its arrival index and
 * parsed body: return a string to answer with that text, a status object
 * to fail, or "hang" to never reply (exercises client timeouts). The
 * arrival counter increments once per HTTP request, retries included.
 */

import { createServer } from "node:http";
import type { AddressInfo } from "node:net";

export interface MockRequest {
  index: number;
  body: Record<string, unknown>;
  prompt: string;
  model: string;
}

export type MockResponder = (req: MockRequest) => string | { status: number; text?: string } | "hang";

export interface MockServer {
  url: string;
  hits: () => number;
  requests: () => MockRequest[];
  close: () => Promise<void>;
}

export async function startMockServer(respond: MockResponder): Promise<MockServer> {
  let count = 0;
  const seen: MockRequest[] = [];
  const server = createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", () => {
      let body: Record<string, unknown> = {};
      try {
        body = JSON.parse(Buffer.concat(chunks).toString("utf-8"));
      } catch {
        // Fall through with an empty body; the responder decides.
      }
      const request: MockRequest = {
        index: count++,
        body,
        prompt: typeof body.prompt === "string" ? body.prompt : "",
        model: typeof body.model === "string" ? body.model : "",
      };
      seen.push(request);
      const action = respond(request);
      if (action === "hang") {
        return;
      }
      if (typeof action === "string") {
        res.writeHead(200, { "Content-Type": "application/json" });
        res.end(JSON.stringify({
          model: request.model || "mock",
          choices: [{ text: action, index: 0, finish_reason: "stop" }],
        }));
        return;
      }
      res.writeHead(action.status, { "Content-Type": "application/json" });
      res.end(action.text ?? JSON.stringify({ error: `scripted status ${action.status}` }));
    });
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const { port } = server.address() as AddressInfo;
  return {
    url: `http://127.0.0.1:${port}/v1/completions`,
    hits: () => count,
    requests: () => [...seen],
    close: () =>
      new Promise((resolve) => {
        server.closeAllConnections();
        server.close(() => resolve());
      }),
  };
}

/**
 * Responder that answers correctly or incorrectly per arrival according
 * to a fixed boolean schedule, cycling if requests outnumber entries.
 */
export function scheduleResponder(objectText: string, schedule: boolean[]): MockResponder {
  if (schedule.length === 0) {
    throw new Error("schedule must not be empty");
  }
  return ({ index }) =>
    schedule[index % schedule.length] ? `The answer is ${objectText}.` : "I am not sure.";
}
