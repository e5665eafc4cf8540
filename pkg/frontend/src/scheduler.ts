// Frame pacing. Ticks are scheduled against an absolute timeline
// (anchor + n / hz) rather than chained intervals, so timer jitter does
// not accumulate: over any window the tick count stays within one frame
// of the configured rate.

export class FrameClock {
  readonly hz: number;
  private cb: () => void;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private anchor = 0;
  private n = 0; // ticks fired since start

  constructor(hz: number, cb: () => void) {
    if (!(hz > 0)) throw new Error(`frame rate must be positive, got ${hz}`);
    this.hz = hz;
    this.cb = cb;
  }

  get ticks(): number {
    return this.n;
  }

  get running(): boolean {
    return this.timer !== null;
  }

  start(): void {
    if (this.timer !== null) return;
    this.anchor = Date.now();
    this.n = 0;
    this.schedule();
  }

  stop(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  private schedule(): void {
    const target = this.anchor + ((this.n + 1) * 1000) / this.hz;
    const delay = Math.max(0, target - Date.now());
    this.timer = setTimeout(() => this.fire(), delay);
  }

  private fire(): void {
    // catch up if the event loop stalled past more than one period
    const due = Math.floor(((Date.now() - this.anchor) * this.hz) / 1000);
    do {
      this.n += 1;
      this.cb();
    } while (this.n < due);
    this.schedule();
  }
}
