/** Public surface. */

export { queryModel, type CompletionResult } from "./client.js";
export { evaluateTriple, evaluateTriples, type EvalRun } from "./evaluate.js";
export { scheduleResponder, startMockServer, type MockRequest, type MockResponder, type MockServer } from "./mock-server.js";
export { writeAccuracy, writeMeta } from "./output.js";
export { normalize, scoreResponse } from "./score.js";
export { loadTemplates, missingRelations, PLACEHOLDER, renderPrompts } from "./templates.js";
export { loadTriples } from "./triples.js";
export {
  DEFAULTS,
  EvalError,
  UsageError,
  type EvalConfig,
  type ResponseRecord,
  type TemplateMap,
  type Triple,
  type TripleAccuracy,
} from "./types.js";
