import { describe, expect, it } from "vitest";

import { escapeHtml, panelStates, renderDashboard, renderStartPage } from "../src/render.js";
import type { Insight, Snapshot } from "../src/types.js";
import { emptySnapshot } from "../src/types.js";
import type { ViewModel } from "../src/viewmodel.js";
import { applySnapshot, createViewModel, selectInsight, tickCountdown } from "../src/viewmodel.js";

const PANEL_TITLES = [
  "Information",
  "Problem Discussion",
  "Solutions/Decisions",
  "Sources",
  "Transcript",
];

function snapshotWith(version: number, extra: Partial<Snapshot> = {}): Snapshot {
  return { ...emptySnapshot("s"), snapshot_version: version, ...extra };
}

function insight(id: string, text: string, paths: string[]): Insight {
  return {
    insight_id: id,
    text,
    sources: paths.map((p, i) => ({ chunk_id: `c#${i}`, source_path: p })),
    query_used: "q",
    created_tick: 0,
    rank: 1,
  };
}

function mount(vm: ViewModel): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.querySelector<HTMLElement>("#app");
  if (root === null) throw new Error("no app container");
  root.innerHTML = renderDashboard(vm);
  return root;
}

function headings(root: HTMLElement): string[] {
  return [...root.querySelectorAll(".panel h2")].map((h) => h.textContent ?? "").sort();
}

describe("empty state", () => {
  it("renders all five panels empty with recording active", () => {
    const root = mount(createViewModel());
    expect(headings(root)).toEqual(PANEL_TITLES);
    expect(root.querySelector("#recording-status")?.textContent).toBe("Active");
    expect(root.querySelector("#run-state")?.textContent).toBe("RUNNING...");
    expect(root.querySelectorAll(".solution")).toHaveLength(0);
    expect(root.querySelectorAll(".turn")).toHaveLength(0);
    expect(root.querySelectorAll(".fact")).toHaveLength(0);
    expect(root.querySelectorAll(".tab")).toHaveLength(0);
    expect(root.querySelector(".problem")?.textContent).toBe("");
    expect(root.querySelector("#error-badge")).toBeNull();
  });
});

describe("insight tabs", () => {
  const six = snapshotWith(1, {
    insights: [1, 2, 3, 4, 5, 6].map((n) => insight(`i${n}`, `Observation ${n}.`, ["kb/a.txt"])),
  });

  it("labels one tab per insight", () => {
    const root = mount(applySnapshot(createViewModel(), six));
    const labels = [...root.querySelectorAll(".tab")].map((b) => b.textContent);
    expect(labels).toEqual([
      "Insight 1",
      "Insight 2",
      "Insight 3",
      "Insight 4",
      "Insight 5",
      "Insight 6",
    ]);
  });

  it("marks the selected tab active and shows its text", () => {
    let vm = applySnapshot(createViewModel(), six);
    vm = selectInsight(vm, 3);
    const root = mount(vm);
    expect(root.querySelector(".tab.active")?.textContent).toBe("Insight 4");
    expect(root.querySelector(".insight-text")?.textContent).toBe("Observation 4.");
  });

  it("highlights a fresh arrival until the user picks a tab", () => {
    let vm = applySnapshot(createViewModel(), snapshotWith(1, {
      insights: [insight("a", "First.", ["kb/a.txt"])],
    }));
    let root = mount(vm);
    expect(root.querySelector(".insight-text.fresh")).not.toBeNull();
    vm = selectInsight(vm, 0);
    root = mount(vm);
    expect(root.querySelector(".insight-text.fresh")).toBeNull();
  });
});

describe("sources panel", () => {
  it("lists the selected insight's source paths verbatim", () => {
    const paths = ["health_data/canada_data/text_data/chunk_1/a.txt", "health_data/b.csv"];
    const vm = applySnapshot(createViewModel(), snapshotWith(1, {
      insights: [insight("a", "First.", paths), insight("b", "Second.", ["kb/other.txt"])],
    }));
    const root = mount(vm);
    const shown = [...root.querySelectorAll("#sources-panel .source")].map((li) => li.textContent);
    expect(shown).toEqual(paths);
  });

  it("follows the selection", () => {
    let vm = applySnapshot(createViewModel(), snapshotWith(1, {
      insights: [insight("a", "First.", ["kb/first.txt"]), insight("b", "Second.", ["kb/second.txt"])],
    }));
    vm = selectInsight(vm, 1);
    const root = mount(vm);
    const shown = [...root.querySelectorAll("#sources-panel .source")].map((li) => li.textContent);
    expect(shown).toEqual(["kb/second.txt"]);
  });
});

describe("panel contents", () => {
  it("renders problem, solutions, info entries and transcript turns", () => {
    const vm = applySnapshot(createViewModel(), snapshotWith(1, {
      extracted: {
        problem: "Lower back pain for the past month",
        info: { duration: "past month", location: "lower back" },
        solutions: ["Physiotherapy", "Imaging"],
        version: 2,
      },
      transcript: [
        { seq: 0, speaker: "doctor", text: "What brings you in?", offset_ms: 0 },
        { seq: 1, speaker: "patient", text: "My back hurts.", offset_ms: 5000 },
      ],
    }));
    const root = mount(vm);
    expect(root.querySelector(".problem")?.textContent).toBe("Lower back pain for the past month");
    const solutions = [...root.querySelectorAll(".solution")].map((li) => li.textContent);
    expect(solutions).toEqual(["Physiotherapy", "Imaging"]);
    const facts = [...root.querySelectorAll(".fact")].map((li) => li.textContent);
    expect(facts).toEqual(["duration: past month", "location: lower back"]);
    const turns = [...root.querySelectorAll(".turn")].map((li) => li.textContent);
    expect(turns).toEqual(["doctor: What brings you in?", "patient: My back hurts."]);
  });

  it("marks failed transcription placeholders", () => {
    const vm = applySnapshot(createViewModel(), snapshotWith(1, {
      transcript: [{ seq: 0, speaker: "patient", text: "[inaudible]", offset_ms: 0, error: true }],
    }));
    const root = mount(vm);
    expect(root.querySelector(".turn.error .line")?.textContent).toBe("[inaudible]");
  });

  it("shows the countdown rounded up", () => {
    let vm = createViewModel(20000);
    vm = tickCountdown(vm, 11.3);
    const root = mount(vm);
    expect(root.querySelector("#countdown")?.textContent).toBe("9");
  });
});

describe("status chrome", () => {
  it("shows the error badge only when the last event was unreadable", () => {
    const vm = { ...createViewModel(), staleEvent: true };
    const root = mount(vm);
    expect(root.querySelector("#error-badge")?.textContent).toBe("last update unreadable");
  });

  it("freezes the view on a finished snapshot", () => {
    const vm = applySnapshot(createViewModel(), snapshotWith(1, { finished: true }));
    const root = mount(vm);
    expect(root.querySelector("#run-state")?.textContent).toBe("FINISHED");
    expect(root.querySelector("#recording-status")?.textContent).toBe("Finished");
    expect(root.querySelector<HTMLButtonElement>("#finish")?.disabled).toBe(true);
    expect(root.querySelector<HTMLButtonElement>("#toggle-recording")?.disabled).toBe(true);
  });

  it("labels the recording toggle by state", () => {
    const active = mount(createViewModel());
    expect(active.querySelector("#toggle-recording")?.textContent).toBe("STOP");
    const paused = mount({ ...createViewModel(), recordingActive: false });
    expect(paused.querySelector("#toggle-recording")?.textContent).toBe("RESUME");
    expect(paused.querySelector("#recording-status")?.textContent).toBe("Paused");
  });
});

describe("escaping", () => {
  it("never turns snapshot text into markup", () => {
    const hostile = '<script>alert("x")</script>';
    const vm = applySnapshot(createViewModel(), snapshotWith(1, {
      extracted: { problem: hostile, info: { note: hostile }, solutions: [hostile], version: 1 },
      transcript: [{ seq: 0, speaker: "patient", text: hostile, offset_ms: 0 }],
    }));
    const root = mount(vm);
    expect(root.querySelector("script")).toBeNull();
    expect(root.querySelector(".problem")?.textContent).toBe(hostile);
  });

  it("escapeHtml covers the dangerous characters", () => {
    expect(escapeHtml('<a href="x">&</a>')).toBe("&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;");
  });
});

describe("panelStates", () => {
  it("derives the panel data without mutating the model", () => {
    const vm = applySnapshot(createViewModel(), snapshotWith(1, {
      extracted: {
        problem: "p",
        info: { duration: "past month", location: "lower back" },
        solutions: ["a"],
        version: 1,
      },
      insights: [insight("i", "Text.", ["kb/x.txt"])],
    }));
    const panels = panelStates(vm);
    expect(panels.info).toEqual([
      ["duration", "past month"],
      ["location", "lower back"],
    ]);
    expect(panels.insightTabs).toEqual(["Insight 1"]);
    expect(panels.sources).toEqual(["kb/x.txt"]);
    expect(panels.recordingStatus).toBe("Active");
    expect(vm.snapshot.extracted.solutions).toEqual(["a"]);
  });
});

describe("start page", () => {
  it("greets with a start form", () => {
    document.body.innerHTML = `<div id="app">${renderStartPage()}</div>`;
    expect(document.querySelector("h1")?.textContent).toBe("Welcome");
    expect(document.querySelector("#start")?.textContent).toBe("Start");
    expect(document.querySelector("#start-error")).toBeNull();
  });

  it("surfaces a start failure", () => {
    document.body.innerHTML = `<div id="app">${renderStartPage("engine unavailable")}</div>`;
    expect(document.querySelector("#start-error")?.textContent).toBe("engine unavailable");
  });
});
