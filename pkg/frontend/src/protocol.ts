// Wire protocol spoken over the /session WebSocket. Field names match the
// service exactly; the client validates structurally and never invents or
// recomputes values the service already sent.

export type Mode = "keyboard" | "drawing" | "raw-events";

export interface SessionConfig {
  type: "config";
  session: string;
  mode: Mode;
  frame_rate: number;
  layout: string | null;
  reference: string | null;
  debounce_frames: number;
  threshold: number;
  grid_width: number;
  grid_height: number;
  blob_sigma: number;
}

export interface PressureGrid {
  width: number;
  height: number;
  data: number[]; // row-major, length width * height
}

export interface FrameMessage {
  type: "frame";
  session: string;
  pressure: PressureGrid;
}

export interface AckMessage {
  type: "ack";
  session: string;
  mode: string;
  frame_rate: number;
  layout: string | null;
  debounce_frames: number;
  threshold: number;
  grid_width: number;
  grid_height: number;
}

export interface TouchEventWire {
  kind: "down" | "up";
  track_id: number;
  frame: number;
  x: number;
  y: number;
  pressure: number;
}

export interface KeyEventWire {
  kind: "down" | "up";
  key: string;
  frame: number;
  x: number;
  y: number;
}

export interface StrokeSampleWire {
  track_id: number;
  frame: number;
  x: number;
  y: number;
  pressure: number;
  width: number;
}

export interface EventsMessage {
  type: "events";
  session: string;
  frame_index: number;
  touch_events: TouchEventWire[];
  key_events: KeyEventWire[];
  strokes: StrokeSampleWire[];
}

export interface TranscriptMessage {
  type: "transcript";
  session: string;
  typed: string;
  reference: string | null;
  elapsed_s: number;
  wpm: number;
  net_wpm: number | null;
  errors: number | null;
}

export interface ErrorMessage {
  type: "error";
  session: string;
  code: string;
  message: string;
}

export type ServerMessage = AckMessage | EventsMessage | TranscriptMessage | ErrorMessage;

export interface KeyRect {
  label: string;
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface Layout {
  name: string;
  keys: KeyRect[];
}

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isStr(v: unknown): v is string {
  return typeof v === "string";
}

function isObj(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function touchEvent(v: unknown): TouchEventWire | null {
  if (!isObj(v)) return null;
  const kind = v.kind;
  if ((kind !== "down" && kind !== "up") || !isNum(v.track_id) || !isNum(v.frame)
      || !isNum(v.x) || !isNum(v.y) || !isNum(v.pressure)) return null;
  return v as unknown as TouchEventWire;
}

function keyEvent(v: unknown): KeyEventWire | null {
  if (!isObj(v)) return null;
  const kind = v.kind;
  if ((kind !== "down" && kind !== "up") || !isStr(v.key) || !isNum(v.frame)
      || !isNum(v.x) || !isNum(v.y)) return null;
  return v as unknown as KeyEventWire;
}

function strokeSample(v: unknown): StrokeSampleWire | null {
  if (!isObj(v)) return null;
  if (!isNum(v.track_id) || !isNum(v.frame) || !isNum(v.x) || !isNum(v.y)
      || !isNum(v.pressure) || !isNum(v.width)) return null;
  return v as unknown as StrokeSampleWire;
}

function allOrNull<T>(vs: unknown, one: (v: unknown) => T | null): T[] | null {
  if (!Array.isArray(vs)) return null;
  const out: T[] = [];
  for (const v of vs) {
    const parsed = one(v);
    if (parsed === null) return null;
    out.push(parsed);
  }
  return out;
}

/**
 * Parse one server message. Returns null (after a console diagnostic) on
 * anything malformed so a bad message can never corrupt UI state.
 */
export function parseServerMessage(raw: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    console.warn("ignoring non-JSON server message", raw.slice(0, 120));
    return null;
  }
  if (!isObj(obj) || !isStr(obj.session)) {
    console.warn("ignoring malformed server message", obj);
    return null;
  }

  switch (obj.type) {
    case "ack": {
      if (isStr(obj.mode) && isNum(obj.frame_rate) && isNum(obj.debounce_frames)
          && isNum(obj.threshold) && isNum(obj.grid_width) && isNum(obj.grid_height)
          && (obj.layout === null || isStr(obj.layout))) {
        return obj as unknown as AckMessage;
      }
      break;
    }
    case "events": {
      const touches = allOrNull(obj.touch_events, touchEvent);
      const keys = allOrNull(obj.key_events, keyEvent);
      const strokes = allOrNull(obj.strokes, strokeSample);
      if (isNum(obj.frame_index) && touches && keys && strokes) {
        return { type: "events", session: obj.session, frame_index: obj.frame_index,
                 touch_events: touches, key_events: keys, strokes };
      }
      break;
    }
    case "transcript": {
      if (isStr(obj.typed) && isNum(obj.elapsed_s) && isNum(obj.wpm)
          && (obj.reference === null || isStr(obj.reference))
          && (obj.net_wpm === null || isNum(obj.net_wpm))
          && (obj.errors === null || isNum(obj.errors))) {
        return obj as unknown as TranscriptMessage;
      }
      break;
    }
    case "error": {
      if (isStr(obj.code) && isStr(obj.message)) {
        return obj as unknown as ErrorMessage;
      }
      break;
    }
  }
  console.warn("ignoring malformed server message", obj);
  return null;
}

/** Parse the GET /layouts response body. */
export function parseLayouts(body: unknown): Layout[] {
  if (!isObj(body) || !Array.isArray(body.layouts)) return [];
  const out: Layout[] = [];
  for (const l of body.layouts) {
    if (!isObj(l) || !isStr(l.name) || !Array.isArray(l.keys)) continue;
    const keys: KeyRect[] = [];
    for (const k of l.keys) {
      if (isObj(k) && isStr(k.label) && isNum(k.x) && isNum(k.y)
          && isNum(k.width) && isNum(k.height)) {
        keys.push(k as unknown as KeyRect);
      }
    }
    out.push({ name: l.name, keys });
  }
  return out;
}
