// WebSocket session client. Sends config first, then frames; parsed server
// messages and connection changes are handed to callbacks. A live input
// device must not replay stale input, so frames are dropped (never queued)
// while the socket is anything but open; reconnects re-send the config.

import type { FrameMessage, ServerMessage, SessionConfig } from "./protocol";
import { parseServerMessage } from "./protocol";

export type ConnectionState = "connecting" | "open" | "reconnecting" | "closed";

// the subset of the browser WebSocket the client needs; node's "ws" and
// test fakes both satisfy it
export interface SocketLike {
  readyState: number;
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

const SOCKET_OPEN = 1;

export interface SessionClientOptions {
  url: string;                      // ws://host:port/session
  config: SessionConfig;
  makeSocket?: SocketFactory;       // defaults to the global WebSocket
  reconnectDelayMs?: number;        // base delay, doubled per attempt
  maxReconnectDelayMs?: number;
  onMessage?: (msg: ServerMessage) => void;
  onState?: (state: ConnectionState) => void;
}

export class SessionClient {
  private opts: Required<Pick<SessionClientOptions, "reconnectDelayMs" | "maxReconnectDelayMs">>
    & SessionClientOptions;
  private socket: SocketLike | null = null;
  private state: ConnectionState = "closed";
  private attempts = 0;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;
  private droppedCount = 0;

  constructor(options: SessionClientOptions) {
    this.opts = { reconnectDelayMs: 500, maxReconnectDelayMs: 8000, ...options };
  }

  get connectionState(): ConnectionState {
    return this.state;
  }

  /** Frames discarded while the socket was not open. */
  get dropped(): number {
    return this.droppedCount;
  }

  connect(): void {
    this.stopped = false;
    this.open("connecting");
  }

  close(): void {
    this.stopped = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.socket = null;
    this.setState("closed");
  }

  /** Send one pad frame; drops it unless the session is open. */
  sendFrame(frame: FrameMessage): boolean {
    if (this.state !== "open" || this.socket === null
        || this.socket.readyState !== SOCKET_OPEN) {
      this.droppedCount += 1;
      return false;
    }
    this.socket.send(JSON.stringify(frame));
    return true;
  }

  private makeSocket(url: string): SocketLike {
    if (this.opts.makeSocket) return this.opts.makeSocket(url);
    const ctor = (globalThis as { WebSocket?: new (url: string) => SocketLike }).WebSocket;
    if (!ctor) throw new Error("no WebSocket implementation available");
    return new ctor(url);
  }

  private open(entryState: ConnectionState): void {
    this.setState(entryState);
    const ws = this.makeSocket(this.opts.url);
    this.socket = ws;
    ws.onopen = () => {
      this.attempts = 0;
      ws.send(JSON.stringify(this.opts.config));
      this.setState("open");
    };
    ws.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg !== null) this.opts.onMessage?.(msg);
    };
    ws.onerror = () => { /* the close handler owns recovery */ };
    ws.onclose = () => {
      if (this.socket !== ws) return; // superseded by a newer socket
      this.socket = null;
      if (!this.stopped) this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    this.setState("reconnecting");
    const delay = Math.min(this.opts.maxReconnectDelayMs,
                           this.opts.reconnectDelayMs * 2 ** this.attempts);
    this.attempts += 1;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      if (!this.stopped) this.open("reconnecting");
    }, delay);
  }

  private setState(state: ConnectionState): void {
    if (this.state === state) return;
    this.state = state;
    this.opts.onState?.(state);
  }
}
