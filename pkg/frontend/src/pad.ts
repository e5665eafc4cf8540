// The virtual pressure pad: pointer samples in grid coordinates are
// rasterized as Gaussian blobs into one dense frame per display tick.
// Browsers expose no true pressure on mice, so pressure is simulated
// (wheel or slider) and clamped to the pad's kPa range.

import type { FrameMessage, PressureGrid } from "./protocol";

export interface PadConfig {
  gridWidth: number;
  gridHeight: number;
  blobSigma: number;   // Gaussian sigma in grid pixels
  maxPressure: number; // ceiling of the simulated control, kPa
}

export const DEFAULT_PAD: PadConfig = {
  gridWidth: 105,
  gridHeight: 185,
  blobSigma: 2.5,
  maxPressure: 30,
};

export interface PadSample {
  x: number;        // grid coords, within [0, gridWidth)
  y: number;        // within [0, gridHeight)
  pressure: number; // kPa, >= 0
  timestamp: number;
}

/** Build a sample with the pad invariants enforced by clamping. */
export function makeSample(x: number, y: number, pressure: number,
                           timestamp: number, cfg: PadConfig): PadSample {
  const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));
  return {
    x: clamp(x, 0, cfg.gridWidth - 1),
    y: clamp(y, 0, cfg.gridHeight - 1),
    pressure: clamp(pressure, 0, cfg.maxPressure),
    timestamp,
  };
}

/**
 * Rasterize the active pointers into a dense row-major grid. No pointer
 * down means an all-zero frame; overlapping blobs add.
 */
export function rasterize(samples: PadSample[], cfg: PadConfig): number[] {
  const { gridWidth: w, gridHeight: h, blobSigma: sigma } = cfg;
  const grid = new Array<number>(w * h).fill(0);
  const inv = 1 / (2 * sigma * sigma);
  // blobs are negligible a few sigmas out; skip the rest of the grid
  const reach = Math.ceil(sigma * 4);
  for (const s of samples) {
    if (s.pressure <= 0) continue;
    const x0 = Math.max(0, Math.floor(s.x - reach));
    const x1 = Math.min(w - 1, Math.ceil(s.x + reach));
    const y0 = Math.max(0, Math.floor(s.y - reach));
    const y1 = Math.min(h - 1, Math.ceil(s.y + reach));
    for (let y = y0; y <= y1; y++) {
      const dy = y - s.y;
      for (let x = x0; x <= x1; x++) {
        const dx = x - s.x;
        grid[y * w + x] += s.pressure * Math.exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }
  return grid;
}

/** One tick of the pad as a wire frame. */
export function frameMessage(session: string, samples: PadSample[],
                             cfg: PadConfig): FrameMessage {
  const pressure: PressureGrid = {
    width: cfg.gridWidth,
    height: cfg.gridHeight,
    data: rasterize(samples, cfg),
  };
  return { type: "frame", session, pressure };
}
