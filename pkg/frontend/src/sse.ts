/**
 * Minimal SSE subscriber over fetch streaming.
 *
 * fetch instead of EventSource so the 404 on an unknown session is
 * observable (EventSource hides response codes). Dropped connections
 * reconnect with a capped exponential backoff; a 404 stops the stream
 * for good and tells the caller, who redirects to the start page.
 */

export interface SubscribeHandlers {
  /** Called with the raw data payload of each SSE event. */
  onEventData(data: string): void;
  /** Called once when the server reports the session unknown (404). */
  onMissing(): void;
}

export interface SubscribeOptions {
  fetchImpl?: typeof fetch;
  /** Backoff schedule in ms; the last entry repeats. */
  retryDelaysMs?: number[];
}

const DEFAULT_DELAYS_MS = [500, 1000, 2000, 4000, 8000];

/** Extract the data payload from one SSE frame; comment frames yield null. */
export function frameData(frame: string): string | null {
  const parts: string[] = [];
  for (const raw of frame.split("\n")) {
    const line = raw.endsWith("\r") ? raw.slice(0, -1) : raw;
    if (!line.startsWith("data:")) continue;
    const rest = line.slice(5);
    parts.push(rest.startsWith(" ") ? rest.slice(1) : rest);
  }
  return parts.length > 0 ? parts.join("\n") : null;
}

/** Open the event stream and keep it open until the returned stop function runs. */
export function subscribe(
  url: string,
  handlers: SubscribeHandlers,
  options: SubscribeOptions = {},
): () => void {
  const fetchImpl = options.fetchImpl ?? globalThis.fetch.bind(globalThis);
  const delays = options.retryDelaysMs ?? DEFAULT_DELAYS_MS;
  let stopped = false;
  let attempt = 0;
  let controller: AbortController | null = null;
  let timer: ReturnType<typeof setTimeout> | null = null;
  let wake: (() => void) | null = null;

  const run = async () => {
    while (!stopped) {
      controller = new AbortController();
      try {
        const response = await fetchImpl(url, {
          headers: { accept: "text/event-stream" },
          signal: controller.signal,
        });
        if (response.status === 404) {
          handlers.onMissing();
          return;
        }
        if (!response.ok || response.body === null) {
          throw new Error(`event stream failed with status ${response.status}`);
        }
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { value, done } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          const frames = buffer.split("\n\n");
          buffer = frames.pop() ?? "";
          for (const frame of frames) {
            const data = frameData(frame);
            if (data !== null && !stopped) {
              attempt = 0;
              handlers.onEventData(data);
            }
          }
        }
      } catch {
        // connection dropped or never opened; retry below
      }
      if (stopped) return;
      const delay = delays[Math.min(attempt, delays.length - 1)];
      attempt += 1;
      await new Promise<void>((resolve) => {
        wake = resolve;
        timer = setTimeout(resolve, delay);
      });
      wake = null;
    }
  };
  void run();

  return () => {
    stopped = true;
    if (timer !== null) clearTimeout(timer);
    wake?.();
    controller?.abort();
  };
}
