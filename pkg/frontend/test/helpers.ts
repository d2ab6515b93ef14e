/** Test doubles: an in-memory API server and SSE stream over a fake fetch. */

import { readFileSync } from "node:fs";
import { join } from "node:path";

export function loadFixture<T>(name: string): T {
  const path = join(process.cwd(), "test", "fixtures", name);
  return JSON.parse(readFileSync(path, "utf-8")) as T;
}

export function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  } as unknown as Response;
}

/** A hand-pumped SSE response; tests push frames whenever they like. */
export class FakeStream {
  private controller!: ReadableStreamDefaultController<Uint8Array>;
  readonly response: Response;

  constructor() {
    const body = new ReadableStream<Uint8Array>({
      start: (c) => {
        this.controller = c;
      },
    });
    this.response = { ok: true, status: 200, body } as unknown as Response;
  }

  push(event: unknown): void {
    this.pushRaw(`data: ${JSON.stringify(event)}\n\n`);
  }

  pushRaw(text: string): void {
    this.controller.enqueue(new TextEncoder().encode(text));
  }

  close(): void {
    try {
      this.controller.close();
    } catch {
      // already closed
    }
  }
}

export interface Recorded {
  url: string;
  method: string;
  body: unknown;
}

export interface FakeServer {
  fetchImpl: typeof fetch;
  requests: Recorded[];
  streams: FakeStream[];
  finishSnapshot: unknown;
  eventsStatus: number;
}

/** Routes the dashboard's requests and records every call. */
export function fakeServer(): FakeServer {
  const server: FakeServer = {
    requests: [],
    streams: [],
    finishSnapshot: null,
    eventsStatus: 200,
    fetchImpl: undefined as unknown as typeof fetch,
  };
  server.fetchImpl = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    const body = init?.body ? (JSON.parse(String(init.body)) as unknown) : null;
    server.requests.push({ url, method, body });
    if (method === "POST" && url.endsWith("/sessions")) {
      return jsonResponse(201, { session_id: (body as { session_id?: string })?.session_id });
    }
    if (method === "POST" && url.endsWith("/segments")) {
      return jsonResponse(202, { seq: 0 });
    }
    if (method === "POST" && url.endsWith("/finish")) {
      return jsonResponse(200, server.finishSnapshot ?? {});
    }
    if (url.endsWith("/events")) {
      if (server.eventsStatus !== 200) {
        return jsonResponse(server.eventsStatus, { error: "unknown session" });
      }
      const stream = new FakeStream();
      server.streams.push(stream);
      return stream.response;
    }
    return jsonResponse(404, { error: "unknown path" });
  }) as typeof fetch;
  return server;
}

/** Dispatch a submit event the way a browser would on pressing enter. */
export function submitForm(form: Element): void {
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}
