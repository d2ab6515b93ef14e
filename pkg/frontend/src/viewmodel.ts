/**
 * Dashboard view model: the latest good snapshot plus local UI state.
 *
 * All transitions are pure functions returning a new model, which keeps
 * rendering a straight function of state and makes the invariants easy
 * to test: the selected insight index stays inside [0, insights.length)
 * and the countdown stays inside [0, tickMs / 1000].
 */

import type { Snapshot } from "./types.js";
import { emptySnapshot, parseEvent } from "./types.js";

export const DEFAULT_TICK_MS = 20000;

export interface ViewModel {
  snapshot: Snapshot;
  selectedInsightIndex: number;
  recordingActive: boolean;
  countdownS: number;
  tickMs: number;
  /** Set when the last event could not be decoded; the view keeps the previous snapshot. */
  staleEvent: boolean;
  /** Insight id that just arrived, for a subtle highlight instead of a focus steal. */
  freshInsightId: string | null;
}

export function createViewModel(tickMs: number = DEFAULT_TICK_MS): ViewModel {
  return {
    snapshot: emptySnapshot(),
    selectedInsightIndex: 0,
    recordingActive: true,
    countdownS: tickMs / 1000,
    tickMs,
    staleEvent: false,
    freshInsightId: null,
  };
}

function clampIndex(index: number, length: number): number {
  if (length <= 0) return 0;
  return Math.min(Math.max(index, 0), length - 1);
}

function clampCountdown(seconds: number, tickMs: number): number {
  return Math.min(Math.max(seconds, 0), tickMs / 1000);
}

/** Fold a received snapshot into the model. Version regressions are ignored. */
export function applySnapshot(vm: ViewModel, snapshot: Snapshot): ViewModel {
  if (snapshot.snapshot_version <= vm.snapshot.snapshot_version) {
    return { ...vm, staleEvent: false };
  }
  const previousHead = vm.snapshot.insights[0]?.insight_id ?? null;
  const head = snapshot.insights[0]?.insight_id ?? null;
  const arrived = head !== null && head !== previousHead;
  const ticked = snapshot.tick_count > vm.snapshot.tick_count;
  return {
    ...vm,
    snapshot,
    selectedInsightIndex: arrived
      ? 0
      : clampIndex(vm.selectedInsightIndex, snapshot.insights.length),
    recordingActive: snapshot.finished ? false : vm.recordingActive,
    countdownS: ticked ? vm.tickMs / 1000 : vm.countdownS,
    staleEvent: false,
    freshInsightId: arrived ? head : vm.freshInsightId,
  };
}

/** Decode one SSE data payload; malformed input keeps the last good view and flags it. */
export function applyEventData(vm: ViewModel, data: string): ViewModel {
  const event = parseEvent(data);
  if (event === null) {
    return { ...vm, staleEvent: true };
  }
  return applySnapshot(vm, event.payload);
}

/** User picked an insight tab; the fresh highlight is dismissed. */
export function selectInsight(vm: ViewModel, index: number): ViewModel {
  return {
    ...vm,
    selectedInsightIndex: clampIndex(index, vm.snapshot.insights.length),
    freshInsightId: null,
  };
}

export function setRecording(vm: ViewModel, active: boolean): ViewModel {
  if (vm.snapshot.finished) return vm;
  return { ...vm, recordingActive: active };
}

/** Advance the client-side countdown toward the next expected tick. */
export function tickCountdown(vm: ViewModel, elapsedS: number = 1): ViewModel {
  return { ...vm, countdownS: clampCountdown(vm.countdownS - elapsedS, vm.tickMs) };
}
