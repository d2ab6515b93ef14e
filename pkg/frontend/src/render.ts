/**
 * Pure rendering: view model in, panel states and HTML strings out.
 *
 * The five panels mirror the consultation layout: Solutions/Decisions and
 * Transcript on the left, Problem Discussion with the insight tabs and the
 * Sources list in the middle, Information on the right. Every dynamic
 * string is drawn from the snapshot and HTML-escaped; the renderer adds
 * only fixed chrome (headings, labels, buttons).
 */

import type { Insight, Segment } from "./types.js";
import type { ViewModel } from "./viewmodel.js";

export interface PanelStates {
  solutions: string[];
  problem: string;
  insightTabs: string[];
  selectedInsight: Insight | null;
  sources: string[];
  info: [string, string][];
  transcript: Segment[];
  recordingStatus: string;
  countdownS: number;
  runState: string;
  staleEvent: boolean;
}

export function panelStates(vm: ViewModel): PanelStates {
  const snap = vm.snapshot;
  const selected = snap.insights[vm.selectedInsightIndex] ?? null;
  return {
    solutions: [...snap.extracted.solutions],
    problem: snap.extracted.problem ?? "",
    insightTabs: snap.insights.map((_, i) => `Insight ${i + 1}`),
    selectedInsight: selected,
    sources: selected ? selected.sources.map((s) => s.source_path) : [],
    info: Object.entries(snap.extracted.info),
    transcript: [...snap.transcript],
    recordingStatus: snap.finished ? "Finished" : vm.recordingActive ? "Active" : "Paused",
    countdownS: vm.countdownS,
    runState: snap.finished ? "FINISHED" : "RUNNING...",
    staleEvent: vm.staleEvent,
  };
}

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function listItems(values: string[], className: string): string {
  return values.map((v) => `<li class="${className}">${escapeHtml(v)}</li>`).join("");
}

function transcriptLines(segments: Segment[]): string {
  return segments
    .map(
      (seg) =>
        `<li class="turn${seg.error ? " error" : ""}">` +
        `<span class="speaker">${escapeHtml(seg.speaker)}</span>: ` +
        `<span class="line">${escapeHtml(seg.text)}</span></li>`,
    )
    .join("");
}

function infoEntries(entries: [string, string][]): string {
  return entries
    .map(
      ([key, value]) =>
        `<li class="fact"><span class="key">${escapeHtml(key)}</span>: ` +
        `<span class="value">${escapeHtml(value)}</span></li>`,
    )
    .join("");
}

function insightArea(panels: PanelStates, freshId: string | null, selectedIndex: number): string {
  const text = panels.selectedInsight
    ? `<p class="insight-text${panels.selectedInsight.insight_id === freshId ? " fresh" : ""}">` +
      `${escapeHtml(panels.selectedInsight.text)}</p>`
    : "";
  const tabs = panels.insightTabs
    .map((label, i) => {
      const classes = ["tab"];
      if (i === selectedIndex) classes.push("active");
      if (panels.selectedInsight && i === selectedIndex && freshId) classes.push("fresh");
      return `<button class="${classes.join(" ")}" data-insight-index="${i}">${label}</button>`;
    })
    .join("");
  return `${text}<nav class="insight-tabs">${tabs}</nav>`;
}

/** The populated dashboard as one HTML string; the host assigns it to a container. */
export function renderDashboard(vm: ViewModel): string {
  const panels = panelStates(vm);
  const badge = panels.staleEvent
    ? '<span id="error-badge" class="badge">last update unreadable</span>'
    : "";
  const stopLabel = vm.recordingActive ? "STOP" : "RESUME";
  return `
<header class="topbar">
  <span id="run-state">${panels.runState}</span>
  ${badge}
  <button id="finish" ${panels.runState === "FINISHED" ? "disabled" : ""}>Finish Session</button>
</header>
<main class="columns">
  <section class="column">
    <section id="solutions-panel" class="panel">
      <h2>Solutions/Decisions</h2>
      <ul>${listItems(panels.solutions, "solution")}</ul>
    </section>
    <section id="transcript-panel" class="panel">
      <h2>Transcript</h2>
      <ul>${transcriptLines(panels.transcript)}</ul>
    </section>
  </section>
  <section class="column">
    <section id="problem-panel" class="panel">
      <h2>Problem Discussion</h2>
      <p class="problem">${escapeHtml(panels.problem)}</p>
      ${insightArea(panels, vm.freshInsightId, vm.selectedInsightIndex)}
    </section>
    <section id="sources-panel" class="panel">
      <h2>Sources</h2>
      <ul>${listItems(panels.sources, "source")}</ul>
    </section>
    <section id="recording-panel" class="panel">
      <p>Voice Recording Status: <span id="recording-status">${panels.recordingStatus}</span>
        <button id="toggle-recording" ${panels.runState === "FINISHED" ? "disabled" : ""}>${stopLabel}</button>
      </p>
      <p>Time left for new updates: <span id="countdown">${Math.ceil(panels.countdownS)}</span> seconds</p>
      <form id="composer">
        <select id="speaker">
          <option value="doctor">doctor</option>
          <option value="patient">patient</option>
        </select>
        <input id="segment-text" type="text" autocomplete="off" placeholder="Type a segment" />
        <button id="send" type="submit">Send</button>
      </form>
    </section>
  </section>
  <section class="column">
    <section id="info-panel" class="panel">
      <h2>Information</h2>
      <ul>${infoEntries(panels.info)}</ul>
    </section>
  </section>
</main>
`;
}

/** The start page: a welcome screen with a session box and a start button. */
export function renderStartPage(error = ""): string {
  const note = error ? `<p id="start-error">${escapeHtml(error)}</p>` : "";
  return `
<section id="start-page">
  <h1>Welcome</h1>
  <form id="start-form">
    <input id="session-id" type="text" autocomplete="off" placeholder="session id" />
    <button id="start" type="submit">Start</button>
  </form>
  ${note}
</section>
`;
}
