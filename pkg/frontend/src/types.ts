/**
 * Wire types for the engine's JSON API and SSE snapshot stream.
 *
 * These mirror the server payloads field for field. The dashboard never
 * invents data of its own: everything rendered traces back to a Snapshot.
 */

export interface Segment {
  seq: number;
  speaker: string;
  text: string;
  offset_ms: number;
  error?: boolean;
}

export interface Extracted {
  problem: string | null;
  info: Record<string, string>;
  solutions: string[];
  version: number;
}

export interface SourceRef {
  chunk_id: string;
  source_path: string;
}

export interface Insight {
  insight_id: string;
  text: string;
  sources: SourceRef[];
  query_used: string;
  created_tick: number;
  rank: number;
}

export interface Snapshot {
  session_id: string;
  snapshot_version: number;
  transcript: Segment[];
  extracted: Extracted;
  insights: Insight[];
  finished: boolean;
  tick_count: number;
}

export interface SnapshotEvent {
  type: "snapshot";
  payload: Snapshot;
}

export function emptySnapshot(sessionId = ""): Snapshot {
  return {
    session_id: sessionId,
    snapshot_version: -1,
    transcript: [],
    extracted: { problem: null, info: {}, solutions: [], version: 0 },
    insights: [],
    finished: false,
    tick_count: 0,
  };
}

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

/** Validate a decoded event payload; returns null for anything malformed. */
export function asSnapshot(value: unknown): Snapshot | null {
  if (!isRecord(value)) return null;
  const { session_id, snapshot_version, transcript, extracted, insights, finished, tick_count } =
    value;
  if (typeof session_id !== "string") return null;
  if (typeof snapshot_version !== "number") return null;
  if (typeof finished !== "boolean") return null;
  if (typeof tick_count !== "number") return null;
  if (!Array.isArray(transcript) || !Array.isArray(insights)) return null;
  if (!isRecord(extracted)) return null;
  if (typeof extracted.problem !== "string" && extracted.problem !== null) return null;
  if (!isRecord(extracted.info)) return null;
  if (!Array.isArray(extracted.solutions)) return null;
  for (const seg of transcript) {
    if (!isRecord(seg)) return null;
    if (typeof seg.speaker !== "string" || typeof seg.text !== "string") return null;
  }
  for (const ins of insights) {
    if (!isRecord(ins)) return null;
    if (typeof ins.text !== "string" || !Array.isArray(ins.sources)) return null;
  }
  return value as unknown as Snapshot;
}

/** Decode one SSE data payload into a snapshot event, or null if malformed. */
export function parseEvent(data: string): SnapshotEvent | null {
  let decoded: unknown;
  try {
    decoded = JSON.parse(data);
  } catch {
    return null;
  }
  if (!isRecord(decoded) || decoded.type !== "snapshot") return null;
  const snapshot = asSnapshot(decoded.payload);
  if (snapshot === null) return null;
  return { type: "snapshot", payload: snapshot };
}
