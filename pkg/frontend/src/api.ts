/** Thin JSON client for the session endpoints the dashboard uses. */

import type { Snapshot } from "./types.js";

export interface ApiClient {
  createSession(sessionId: string): Promise<void>;
  postSegment(sessionId: string, speaker: string, text: string, offsetMs: number): Promise<void>;
  finishSession(sessionId: string): Promise<Snapshot>;
}

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    if (typeof body.error === "string") return body.error;
  } catch {
    // not JSON; fall through
  }
  return `request failed with status ${response.status}`;
}

export function createApiClient(baseUrl: string, fetchImpl?: typeof fetch): ApiClient {
  const doFetch = fetchImpl ?? globalThis.fetch.bind(globalThis);
  const post = async (path: string, body: unknown): Promise<Response> =>
    doFetch(`${baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });

  return {
    async createSession(sessionId: string): Promise<void> {
      const response = await post("/sessions", { session_id: sessionId });
      // 409 means the session already runs; attaching to it is fine
      if (!response.ok && response.status !== 409) {
        throw new Error(await errorMessage(response));
      }
    },

    async postSegment(
      sessionId: string,
      speaker: string,
      text: string,
      offsetMs: number,
    ): Promise<void> {
      const response = await post(`/sessions/${encodeURIComponent(sessionId)}/segments`, {
        speaker,
        text,
        offset_ms: offsetMs,
      });
      if (!response.ok) {
        throw new Error(await errorMessage(response));
      }
    },

    async finishSession(sessionId: string): Promise<Snapshot> {
      const response = await post(`/sessions/${encodeURIComponent(sessionId)}/finish`, {});
      if (!response.ok) {
        throw new Error(await errorMessage(response));
      }
      return (await response.json()) as Snapshot;
    },
  };
}
