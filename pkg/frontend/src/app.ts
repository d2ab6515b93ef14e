/**
 * DOM wiring: start page, live dashboard, event stream and controls.
 *
 * One container element owns the whole UI. Events are delegated from the
 * container so full re-renders keep their handlers; the composer text
 * survives re-renders by copying it across. Insight tab clicks and the
 * STOP toggle stay local: they re-render from state and never touch the
 * network.
 */

import { createApiClient } from "./api.js";
import { renderDashboard, renderStartPage } from "./render.js";
import { subscribe } from "./sse.js";
import type { ViewModel } from "./viewmodel.js";
import {
  DEFAULT_TICK_MS,
  applyEventData,
  applySnapshot,
  createViewModel,
  selectInsight,
  setRecording,
  tickCountdown,
} from "./viewmodel.js";

export interface AppOptions {
  /** API origin; defaults to the container's data-api-base, then same origin. */
  baseUrl?: string;
  tickMs?: number;
  fetchImpl?: typeof fetch;
  retryDelaysMs?: number[];
  /** Countdown refresh period; 0 disables the timer. */
  countdownIntervalMs?: number;
  now?: () => number;
}

export interface App {
  start(sessionId: string): Promise<void>;
  model(): ViewModel;
  destroy(): void;
}

export function createApp(root: HTMLElement, options: AppOptions = {}): App {
  const baseUrl = options.baseUrl ?? root.dataset.apiBase ?? "";
  const api = createApiClient(baseUrl, options.fetchImpl);
  const tickMs = options.tickMs ?? DEFAULT_TICK_MS;
  const now = options.now ?? Date.now;
  const intervalMs = options.countdownIntervalMs ?? 1000;

  let vm = createViewModel(tickMs);
  let view: "start" | "dashboard" = "start";
  let sessionId = "";
  let startedAt = 0;
  let stopStream: (() => void) | null = null;
  let countdownTimer: ReturnType<typeof setInterval> | null = null;

  const renderView = (startError = "") => {
    if (view === "start") {
      root.innerHTML = renderStartPage(startError);
      return;
    }
    const textBox = root.querySelector<HTMLInputElement>("#segment-text");
    const speakerBox = root.querySelector<HTMLSelectElement>("#speaker");
    const pendingText = textBox?.value ?? "";
    const pendingSpeaker = speakerBox?.value ?? "doctor";
    root.innerHTML = renderDashboard(vm);
    const nextText = root.querySelector<HTMLInputElement>("#segment-text");
    if (nextText) nextText.value = pendingText;
    const nextSpeaker = root.querySelector<HTMLSelectElement>("#speaker");
    if (nextSpeaker) nextSpeaker.value = pendingSpeaker;
  };

  const update = (next: ViewModel) => {
    vm = next;
    renderView();
  };

  const endStream = () => {
    stopStream?.();
    stopStream = null;
  };

  const toStartPage = () => {
    endStream();
    view = "start";
    vm = createViewModel(tickMs);
    renderView();
  };

  const onEventData = (data: string) => {
    update(applyEventData(vm, data));
    if (vm.snapshot.finished) endStream();
  };

  const openStream = () => {
    endStream();
    stopStream = subscribe(
      `${baseUrl}/sessions/${encodeURIComponent(sessionId)}/events`,
      { onEventData, onMissing: toStartPage },
      { fetchImpl: options.fetchImpl, retryDelaysMs: options.retryDelaysMs },
    );
  };

  const start = async (id: string) => {
    await api.createSession(id);
    sessionId = id;
    startedAt = now();
    view = "dashboard";
    update(createViewModel(tickMs));
    openStream();
  };

  const sendSegment = async () => {
    const textBox = root.querySelector<HTMLInputElement>("#segment-text");
    const speakerBox = root.querySelector<HTMLSelectElement>("#speaker");
    const text = textBox?.value.trim() ?? "";
    if (!vm.recordingActive || vm.snapshot.finished || text === "") return;
    const speaker = speakerBox?.value ?? "doctor";
    if (textBox) textBox.value = "";
    try {
      await api.postSegment(sessionId, speaker, text, Math.max(0, now() - startedAt));
    } catch {
      // keep the text so the user can retry
      const box = root.querySelector<HTMLInputElement>("#segment-text");
      if (box && box.value === "") box.value = text;
    }
  };

  const finish = async () => {
    if (vm.snapshot.finished) return;
    const snapshot = await api.finishSession(sessionId);
    update(applySnapshot(vm, snapshot));
    endStream();
  };

  const onClick = (event: Event) => {
    const target = event.target as HTMLElement | null;
    if (!target) return;
    const tab = target.closest<HTMLElement>("[data-insight-index]");
    if (tab) {
      const index = Number(tab.dataset.insightIndex ?? "");
      if (Number.isFinite(index)) update(selectInsight(vm, index));
      return;
    }
    if (target.closest("#toggle-recording")) {
      update(setRecording(vm, !vm.recordingActive));
      return;
    }
    if (target.closest("#finish")) void finish();
  };

  const onSubmit = (event: Event) => {
    const target = event.target as HTMLElement | null;
    if (!target) return;
    event.preventDefault();
    if (target.id === "start-form") {
      const box = root.querySelector<HTMLInputElement>("#session-id");
      const id = box?.value.trim() || `session-${Date.now().toString(36)}`;
      start(id).catch((err: unknown) => {
        view = "start";
        renderView(err instanceof Error ? err.message : "could not start the session");
      });
      return;
    }
    if (target.id === "composer") void sendSegment();
  };

  root.addEventListener("click", onClick);
  root.addEventListener("submit", onSubmit);
  if (intervalMs > 0) {
    countdownTimer = setInterval(() => {
      if (view !== "dashboard" || vm.snapshot.finished) return;
      vm = tickCountdown(vm, intervalMs / 1000);
      const el = root.querySelector("#countdown");
      if (el) el.textContent = String(Math.ceil(vm.countdownS));
    }, intervalMs);
  }
  renderView();

  return {
    start,
    model: () => vm,
    destroy() {
      endStream();
      if (countdownTimer !== null) {
        clearInterval(countdownTimer);
        countdownTimer = null;
      }
      root.removeEventListener("click", onClick);
      root.removeEventListener("submit", onSubmit);
      root.innerHTML = "";
    },
  };
}
