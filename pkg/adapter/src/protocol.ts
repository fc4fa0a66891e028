/**
 * Newline-delimited JSON protocol.
 *
 * Request:  {"id": n, "op": "translate"|"tag", "src": "..", "tgt": "..", "tokens": [..]}
 * Response: {"id": n, "tokens": [..]} | {"id": n, "tags": [..]} | {"id": n, "error": ".."}
 *
 * Every request line yields exactly one response line. Records that fail to
 * parse still get an error response: with the request's id when one could be
 * extracted, otherwise id -1. The handler never throws.
 */

import { Models } from "./models";

export interface Response {
  id: number;
  tokens?: string[];
  tags?: string[];
  error?: string;
}

export function handleLine(line: string, models: Models): Response {
  let record: unknown;
  try {
    record = JSON.parse(line);
  } catch {
    return { id: salvageId(line), error: "unparseable request line" };
  }
  if (typeof record !== "object" || record === null) {
    return { id: -1, error: "request must be a JSON object" };
  }
  const req = record as Record<string, unknown>;
  const id = typeof req.id === "number" && Number.isInteger(req.id) ? (req.id as number) : -1;
  if (id === -1) {
    return { id, error: "request is missing an integer id" };
  }
  try {
    if (!Array.isArray(req.tokens) || !req.tokens.every((t) => typeof t === "string")) {
      return { id, error: "tokens must be a list of strings" };
    }
    const tokens = req.tokens as string[];
    if (req.op === "translate") {
      if (!models.translator) return { id, error: "no translator configured" };
      if (typeof req.src !== "string" || typeof req.tgt !== "string") {
        return { id, error: "translate needs src and tgt language codes" };
      }
      return { id, tokens: models.translator.translate(tokens, req.src, req.tgt) };
    }
    if (req.op === "tag") {
      if (!models.tagger) return { id, error: "no tagger configured" };
      return { id, tags: models.tagger.tag(tokens) };
    }
    return { id, error: `unknown op ${JSON.stringify(req.op)}` };
  } catch (e) {
    return { id, error: e instanceof Error ? e.message : String(e) };
  }
}

/** Best effort id recovery from a line that did not parse as JSON. */
function salvageId(line: string): number {
  const m = line.match(/"id"\s*:\s*(-?\d+)/);
  return m ? parseInt(m[1], 10) : -1;
}

export function formatResponse(resp: Response): string {
  return JSON.stringify(resp);
}
