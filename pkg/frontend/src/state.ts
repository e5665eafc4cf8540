// UI state and the reducer that folds server messages into it. All scores
// and events come from the service verbatim; the only client-side text
// handling is the live preview of keys typed since the last transcript.

import type {
  ErrorMessage, KeyEventWire, ServerMessage, StrokeSampleWire,
  TouchEventWire, TranscriptMessage,
} from "./protocol";
import type { ConnectionState } from "./client";

export interface StrokePoint {
  x: number;
  y: number;
  width: number;
}

export interface AppState {
  connection: ConnectionState;
  keysDown: Map<string, KeyEventWire>;        // highlighted keys
  markers: Map<number, TouchEventWire>;       // live contact markers by track
  strokes: Map<number, StrokePoint[]>;        // polyline per track
  preview: string;                            // keys typed since last Enter
  transcript: TranscriptMessage | null;       // latest score, service verbatim
  lastError: ErrorMessage | null;
  framesAcked: number;                        // events messages seen
}

export function initialState(): AppState {
  return {
    connection: "closed",
    keysDown: new Map(),
    markers: new Map(),
    strokes: new Map(),
    preview: "",
    transcript: null,
    lastError: null,
    framesAcked: 0,
  };
}

// mirror of the service's transcript folding, for display before Enter only
function foldKeyDown(preview: string, key: string): string {
  if (key === "Enter") return preview;
  if (key === "Space") return preview + " ";
  if (key === "Backspace") return preview.slice(0, -1);
  if (key.length === 1) return preview + key;
  return preview;
}

function applyKeyEvent(state: AppState, ev: KeyEventWire): void {
  if (ev.kind === "down") {
    state.keysDown.set(ev.key, ev);
    state.preview = foldKeyDown(state.preview, ev.key);
  } else {
    state.keysDown.delete(ev.key);
  }
}

function applyTouchEvent(state: AppState, ev: TouchEventWire): void {
  if (ev.kind === "down") {
    state.markers.set(ev.track_id, ev);
  } else {
    state.markers.delete(ev.track_id);
  }
}

function applyStroke(state: AppState, s: StrokeSampleWire): void {
  let points = state.strokes.get(s.track_id);
  if (!points) {
    points = [];
    state.strokes.set(s.track_id, points);
  }
  points.push({ x: s.x, y: s.y, width: s.width });
}

/** Fold one parsed server message into the state (mutates in place). */
export function applyServerMessage(state: AppState, msg: ServerMessage): AppState {
  switch (msg.type) {
    case "ack":
      break; // settings echo; connection state comes from the client
    case "events":
      state.framesAcked += 1;
      for (const ev of msg.touch_events) applyTouchEvent(state, ev);
      for (const ev of msg.key_events) applyKeyEvent(state, ev);
      for (const s of msg.strokes) applyStroke(state, s);
      break;
    case "transcript":
      // single source of truth: shown exactly as scored by the service
      state.transcript = msg;
      state.preview = "";
      break;
    case "error":
      state.lastError = msg;
      break;
  }
  return state;
}

export function clearStrokes(state: AppState): void {
  state.strokes.clear();
}
