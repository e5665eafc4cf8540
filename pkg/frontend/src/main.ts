// Wiring: query-string config, layout fetch, pointer capture, the frame
// clock, and the render loop. Socket callbacks only update state; drawing
// reads one snapshot per animation tick.

import { SessionClient, type ConnectionState } from "./client";
import { DEFAULT_PAD, frameMessage, makeSample, type PadSample } from "./pad";
import { parseLayouts, type Layout, type Mode, type SessionConfig } from "./protocol";
import { FrameClock } from "./scheduler";
import { draw } from "./render";
import { applyServerMessage, initialState } from "./state";
import { toGrid, viewScale } from "./render";

function qs(name: string, fallback: string): string {
  return new URLSearchParams(location.search).get(name) ?? fallback;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function asMode(v: string): Mode {
  return v === "drawing" || v === "raw-events" ? v : "keyboard";
}

async function start(): Promise<void> {
  const host = qs("host", location.host || "127.0.0.1:8000");
  const mode = asMode(qs("mode", "keyboard"));
  const layoutName = qs("layout", "qwerty");
  const hz = Number(qs("hz", "15")) || 15;
  const reference = qs("reference", "");
  const session = qs("session", `pad-${Math.random().toString(36).slice(2, 8)}`);

  const cfg = { ...DEFAULT_PAD };
  const state = initialState();
  let pressure = 8; // simulated kPa, adjusted by wheel or slider

  const canvas = el<HTMLCanvasElement>("pad");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");

  const statusEl = el<HTMLSpanElement>("status");
  const previewEl = el<HTMLDivElement>("preview");
  const scoreEl = el<HTMLDivElement>("score");
  const errorEl = el<HTMLDivElement>("error");
  const pressureEl = el<HTMLInputElement>("pressure");
  const clearEl = el<HTMLButtonElement>("clear");
  pressureEl.max = String(cfg.maxPressure);
  pressureEl.value = String(pressure);

  let layout: Layout | null = null;
  if (mode !== "drawing" && layoutName !== "none") {
    try {
      const res = await fetch(`http://${host}/layouts`);
      const layouts = parseLayouts(await res.json());
      layout = layouts.find((l) => l.name === layoutName) ?? null;
    } catch (err) {
      console.warn("layout fetch failed", err);
    }
  }

  const config: SessionConfig = {
    type: "config",
    session,
    mode,
    frame_rate: hz,
    layout: layout ? layoutName : null,
    reference: reference || null,
    debounce_frames: 2,
    threshold: 1.0,
    grid_width: cfg.gridWidth,
    grid_height: cfg.gridHeight,
    blob_sigma: cfg.blobSigma,
  };

  const client = new SessionClient({
    url: `ws://${host}/session`,
    config,
    onMessage: (msg) => applyServerMessage(state, msg),
    onState: (s: ConnectionState) => { state.connection = s; },
  });
  client.connect();

  // pointer capture; grid coordinates, multi-touch by pointerId
  const pointers = new Map<number, PadSample>();
  const sampleAt = (ev: PointerEvent): PadSample => {
    const rect = canvas.getBoundingClientRect();
    const scale = viewScale(canvas.width, canvas.height, cfg);
    const px = ((ev.clientX - rect.left) / rect.width) * canvas.width;
    const py = ((ev.clientY - rect.top) / rect.height) * canvas.height;
    const g = toGrid(px, py, scale);
    return makeSample(g.x, g.y, pressure, performance.now(), cfg);
  };
  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    pointers.set(ev.pointerId, sampleAt(ev));
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (pointers.has(ev.pointerId)) pointers.set(ev.pointerId, sampleAt(ev));
  });
  const lift = (ev: PointerEvent) => pointers.delete(ev.pointerId);
  canvas.addEventListener("pointerup", lift);
  canvas.addEventListener("pointercancel", lift);
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    pressure = Math.min(cfg.maxPressure, Math.max(0, pressure - Math.sign(ev.deltaY)));
    pressureEl.value = String(pressure);
    for (const [id, s] of pointers) {
      pointers.set(id, makeSample(s.x, s.y, pressure, performance.now(), cfg));
    }
  }, { passive: false });
  pressureEl.addEventListener("input", () => {
    pressure = Number(pressureEl.value);
  });
  clearEl.addEventListener("click", () => state.strokes.clear());

  // one frame per tick; dropped (not queued) while disconnected
  const clock = new FrameClock(hz, () => {
    client.sendFrame(frameMessage(session, [...pointers.values()], cfg));
  });
  clock.start();

  const render = () => {
    draw(ctx, { layout, cfg, state, pressure });
    statusEl.textContent = `${state.connection} | ${clock.ticks} frames sent, ` +
      `${client.dropped} dropped, ${state.framesAcked} acked`;
    statusEl.className = state.connection;
    previewEl.textContent = state.preview || " ";
    const t = state.transcript;
    scoreEl.textContent = t === null
      ? "type and press Enter to score"
      : t.net_wpm === null
        ? `"${t.typed}" | ${t.wpm.toFixed(1)} WPM (no reference)`
        : `"${t.typed}" | ${t.wpm.toFixed(1)} WPM | net ${t.net_wpm.toFixed(1)} | ` +
          `${t.errors} errors`;
    errorEl.textContent = state.lastError
      ? `${state.lastError.code}: ${state.lastError.message}` : "";
    requestAnimationFrame(render);
  };
  requestAnimationFrame(render);
}

start().catch((err) => {
  console.error(err);
  const banner = document.getElementById("error");
  if (banner) banner.textContent = String(err);
});
