// Canvas drawing. Pure coordinate helpers are exported for tests; the
// draw function reads one state snapshot and never touches the network.

import type { Layout } from "./protocol";
import type { AppState } from "./state";
import type { PadConfig } from "./pad";

export interface ViewScale {
  sx: number; // canvas px per grid px, horizontal
  sy: number;
}

export function viewScale(canvasW: number, canvasH: number, cfg: PadConfig): ViewScale {
  return { sx: canvasW / cfg.gridWidth, sy: canvasH / cfg.gridHeight };
}

/** Canvas pixel position to pad grid coordinates. */
export function toGrid(px: number, py: number, scale: ViewScale): { x: number; y: number } {
  return { x: px / scale.sx, y: py / scale.sy };
}

export interface DrawOptions {
  layout: Layout | null;
  cfg: PadConfig;
  state: AppState;
  pressure: number; // current simulated pressure, for the HUD bar
}

export function draw(ctx: CanvasRenderingContext2D, opts: DrawOptions): void {
  const { canvas } = ctx;
  const scale = viewScale(canvas.width, canvas.height, opts.cfg);

  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  if (opts.layout) drawKeys(ctx, opts.layout, scale, opts.state);
  drawStrokes(ctx, opts.state, scale);
  drawMarkers(ctx, opts.state, scale);
  drawPressureBar(ctx, opts.pressure, opts.cfg.maxPressure);
}

function drawKeys(ctx: CanvasRenderingContext2D, layout: Layout,
                  scale: ViewScale, state: AppState): void {
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  for (const key of layout.keys) {
    const x = key.x * scale.sx;
    const y = key.y * scale.sy;
    const w = key.width * scale.sx;
    const h = key.height * scale.sy;
    const down = state.keysDown.has(key.label);
    ctx.fillStyle = down ? "#3b82f6" : "#1f2733";
    ctx.strokeStyle = "#3a4657";
    ctx.fillRect(x, y, w, h);
    ctx.strokeRect(x, y, w, h);
    ctx.fillStyle = down ? "#ffffff" : "#9fb0c3";
    ctx.font = `${Math.max(9, Math.min(14, h * 0.35))}px system-ui, sans-serif`;
    const label = key.label.length > 1 ? key.label : key.label.toUpperCase();
    ctx.fillText(label, x + w / 2, y + h / 2, w - 4);
  }
}

function drawMarkers(ctx: CanvasRenderingContext2D, state: AppState,
                     scale: ViewScale): void {
  for (const marker of state.markers.values()) {
    const x = marker.x * scale.sx;
    const y = marker.y * scale.sy;
    ctx.beginPath();
    ctx.arc(x, y, 7, 0, Math.PI * 2);
    ctx.fillStyle = "rgba(239, 68, 68, 0.85)";
    ctx.fill();
    ctx.strokeStyle = "#fecaca";
    ctx.stroke();
  }
}

function drawStrokes(ctx: CanvasRenderingContext2D, state: AppState,
                     scale: ViewScale): void {
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  ctx.strokeStyle = "#22d3ee";
  for (const points of state.strokes.values()) {
    for (let i = 1; i < points.length; i++) {
      const a = points[i - 1];
      const b = points[i];
      ctx.lineWidth = ((a.width + b.width) / 2) * scale.sx;
      ctx.beginPath();
      ctx.moveTo(a.x * scale.sx, a.y * scale.sy);
      ctx.lineTo(b.x * scale.sx, b.y * scale.sy);
      ctx.stroke();
    }
    if (points.length === 1) {
      const p = points[0];
      ctx.beginPath();
      ctx.arc(p.x * scale.sx, p.y * scale.sy, (p.width * scale.sx) / 2, 0, Math.PI * 2);
      ctx.fillStyle = "#22d3ee";
      ctx.fill();
    }
  }
}

function drawPressureBar(ctx: CanvasRenderingContext2D, pressure: number,
                         maxPressure: number): void {
  const { canvas } = ctx;
  const h = canvas.height * Math.min(1, pressure / maxPressure);
  ctx.fillStyle = "rgba(34, 211, 238, 0.25)";
  ctx.fillRect(canvas.width - 8, canvas.height - h, 8, h);
}
