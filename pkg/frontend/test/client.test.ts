import { describe, expect, it } from "vitest";

import { GatewayClient, type FetchLike } from "../src/client.js";
import { CommandLog } from "../src/commandlog.js";
import type { CommandEvent } from "../src/types.js";

interface Call {
  url: string;
  init?: { method?: string; body?: string };
}

function mockFetch(status = 200, payload: unknown = {}) {
  const calls: Call[] = [];
  const impl: FetchLike = async (url, init) => {
    calls.push({ url, init });
    return {
      ok: status >= 200 && status < 300,
      status,
      json: async () => payload,
    };
  };
  return { calls, impl };
}

describe("GatewayClient", () => {
  it("derives the websocket URL from the http base", () => {
    expect(new GatewayClient("http://gw:8800").eventsUrl).toBe(
      "ws://gw:8800/events",
    );
    expect(new GatewayClient("https://gw").eventsUrl).toBe("wss://gw/events");
  });

  it("posts commands as {session, text} JSON", async () => {
    const { calls, impl } = mockFetch();
    const client = new GatewayClient("http://gw", impl);
    await client.command("console", "blueberry move to red");
    expect(calls[0].url).toBe("http://gw/command");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(calls[0].init?.body ?? "")).toEqual({
      session: "console",
      text: "blueberry move to red",
    });
  });

  it("posts spawn with a base position", async () => {
    const { calls, impl } = mockFetch();
    await new GatewayClient("http://gw", impl).spawn("console", [0, 0, 0]);
    expect(JSON.parse(calls[0].init?.body ?? "")).toEqual({
      session: "console",
      base: [0, 0, 0],
    });
  });

  it("encodes the session into the /state query", async () => {
    const { calls, impl } = mockFetch(200, { state: "ready" });
    await new GatewayClient("http://gw", impl).state("a b");
    expect(calls[0].url).toBe("http://gw/state?session=a%20b");
  });

  it("raises on non-2xx posts and reports health as a boolean", async () => {
    const { impl } = mockFetch(409);
    const client = new GatewayClient("http://gw", impl);
    await expect(client.spawn("s", [0, 0, 0])).rejects.toThrow(/409/);
    expect(await client.health()).toBe(false);
    const failing: FetchLike = async () => {
      throw new Error("refused");
    };
    expect(await new GatewayClient("http://gw", failing).health()).toBe(false);
  });
});

describe("CommandLog", () => {
  const cmd = (seq: number, outcome: CommandEvent["outcome"]): CommandEvent => ({
    type: "command",
    session: "s",
    seq,
    ts: 0,
    stage: "llm",
    outcome,
  });

  it("keeps newest first, maps outcomes to tones, and ignores pose events", () => {
    const log = new CommandLog(2);
    log.push({ type: "pose", session: "s", seq: 1, ts: 0, q: [], ee: [], t: 0 });
    log.push(cmd(2, "valid"));
    log.push(cmd(3, "invalid"));
    log.push(cmd(4, "uncertain"));
    expect(log.entries.map((l) => l.seq)).toEqual([4, 3]); // capacity 2
    expect(log.entries[0].tone).toBe("warn");
    expect(log.entries[1].tone).toBe("error");
  });
});
