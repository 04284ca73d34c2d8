// Gateway connection with automatic reconnect. The socket constructor is
// injectable so tests can drive the whole lifecycle without a server.

import { parseServerMessage, type ServerMessage } from "./protocol.js";
import type { ConnectionStatus } from "./state.js";

export interface WsLike {
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  send(data: string): void;
  close(): void;
}

export type WsFactory = (url: string) => WsLike;

export interface ClientHandlers {
  onMessage(msg: ServerMessage): void;
  onStatus(status: ConnectionStatus): void;
}

export interface ClientOptions {
  initialDelayMs?: number;
  maxDelayMs?: number;
  factory?: WsFactory;
}

export class GatewayClient {
  private ws: WsLike | null = null;
  private open = false;
  private stopped = false;
  private delayMs: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private readonly initialDelayMs: number;
  private readonly maxDelayMs: number;
  private readonly factory: WsFactory;
  attempts = 0;

  constructor(
    readonly url: string,
    private readonly handlers: ClientHandlers,
    opts: ClientOptions = {},
  ) {
    this.initialDelayMs = opts.initialDelayMs ?? 500;
    this.maxDelayMs = opts.maxDelayMs ?? 10000;
    this.delayMs = this.initialDelayMs;
    this.factory = opts.factory ?? ((u) => new WebSocket(u) as unknown as WsLike);
  }

  connect(): void {
    if (this.stopped) return;
    this.attempts += 1;
    this.handlers.onStatus(this.attempts === 1 ? "connecting" : "reconnecting");
    let ws: WsLike;
    try {
      ws = this.factory(this.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.ws = ws;
    ws.onopen = () => {
      this.open = true;
      this.delayMs = this.initialDelayMs; // a good connection resets backoff
      this.handlers.onStatus("connected");
    };
    ws.onclose = () => {
      this.open = false;
      this.ws = null;
      if (this.stopped) return;
      this.scheduleReconnect();
    };
    ws.onerror = () => {
      // close always follows; nothing to do here
    };
    ws.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      const msg = parseServerMessage(ev.data);
      if (msg !== null) this.handlers.onMessage(msg);
    };
  }

  private scheduleReconnect(): void {
    this.handlers.onStatus("reconnecting");
    const delay = this.delayMs;
    this.delayMs = Math.min(this.delayMs * 2, this.maxDelayMs);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.connect();
    }, delay);
  }

  get connected(): boolean {
    return this.open;
  }

  /** Returns false when the message could not be handed to a live socket. */
  send(text: string): boolean {
    if (!this.open || this.ws === null) return false;
    try {
      this.ws.send(text);
      return true;
    } catch {
      return false;
    }
  }

  /** Stop for good: no further reconnect attempts. */
  close(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.open = false;
    if (this.ws !== null) {
      this.ws.close();
      this.ws = null;
    }
    this.handlers.onStatus("closed");
  }
}
