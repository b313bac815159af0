/** Thin typed client for the gateway's HTTP endpoints. */

import type { GatewayEvent, StateSnapshot } from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class GatewayClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? (fetch.bind(globalThis) as FetchLike);
  }

  get eventsUrl(): string {
    return this.baseUrl.replace(/^http/, "ws") + "/events";
  }

  async health(): Promise<boolean> {
    try {
      const resp = await this.fetchImpl(`${this.baseUrl}/health`);
      return resp.ok;
    } catch {
      return false;
    }
  }

  async state(session: string): Promise<StateSnapshot> {
    const url = `${this.baseUrl}/state?session=${encodeURIComponent(session)}`;
    const resp = await this.fetchImpl(url);
    if (!resp.ok) throw new Error(`GET /state failed: ${resp.status}`);
    return (await resp.json()) as StateSnapshot;
  }

  async spawn(session: string, base: [number, number, number]): Promise<void> {
    await this.post("/spawn", { session, base });
  }

  async command(session: string, text: string): Promise<void> {
    await this.post("/command", { session, text });
  }

  async recentEvents(): Promise<GatewayEvent[]> {
    const resp = await this.fetchImpl(`${this.baseUrl}/events/recent`);
    if (!resp.ok) throw new Error(`GET /events/recent failed: ${resp.status}`);
    return (await resp.json()) as GatewayEvent[];
  }

  private async post(path: string, body: unknown): Promise<void> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw new Error(`POST ${path} failed: ${resp.status}`);
  }
}
