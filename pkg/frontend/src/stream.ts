/** Auto-reconnecting WebSocket subscription to the gateway's /events feed. */

import { Backoff } from "./backoff.js";
import { isGatewayEvent, type GatewayEvent } from "./types.js";

/** The subset of the WebSocket API the stream needs (injectable in tests). */
export interface WsLike {
  onopen: ((ev: unknown) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  close(): void;
}

export type WsFactory = (url: string) => WsLike;

export interface StreamOptions {
  onEvent: (event: GatewayEvent) => void;
  onStatus?: (status: "connecting" | "open" | "closed") => void;
  wsFactory?: WsFactory;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
  backoff?: Backoff;
}

export class EventStream {
  readonly backoff: Backoff;
  private ws: WsLike | null = null;
  private stopped = false;
  private lastSeq = -1;
  private readonly wsFactory: WsFactory;
  private readonly setTimeoutFn: (fn: () => void, ms: number) => unknown;

  constructor(
    readonly url: string,
    private readonly options: StreamOptions,
  ) {
    this.backoff = options.backoff ?? new Backoff();
    this.wsFactory =
      options.wsFactory ?? ((u) => new WebSocket(u) as unknown as WsLike);
    this.setTimeoutFn =
      options.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
  }

  start(): void {
    this.stopped = false;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    this.ws?.close();
    this.ws = null;
  }

  private connect(): void {
    if (this.stopped) return;
    this.options.onStatus?.("connecting");
    const ws = this.wsFactory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.backoff.reset();
      this.options.onStatus?.("open");
    };
    ws.onmessage = (ev) => this.handleMessage(ev.data);
    ws.onerror = () => {
      /* the close handler owns reconnection */
    };
    ws.onclose = () => {
      this.options.onStatus?.("closed");
      if (this.stopped) return;
      this.setTimeoutFn(() => this.connect(), this.backoff.nextDelay());
    };
  }

  private handleMessage(data: unknown): void {
    if (typeof data !== "string") return; // binary frames are not ours
    let parsed: unknown;
    try {
      parsed = JSON.parse(data);
    } catch {
      return; // malformed frames are dropped, never fatal
    }
    if (!isGatewayEvent(parsed)) return;
    if (parsed.seq <= this.lastSeq) return; // duplicate after a reconnect
    this.lastSeq = parsed.seq;
    this.options.onEvent(parsed);
  }
}
