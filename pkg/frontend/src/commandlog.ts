/** Bounded, newest-first log of command outcomes for the console sidebar. */

import type { CommandEvent, GatewayEvent } from "./types.js";

export interface LogLine {
  seq: number;
  label: string;
  tone: "ok" | "warn" | "error";
}

const TONE: Record<CommandEvent["outcome"], LogLine["tone"]> = {
  valid: "ok",
  uncertain: "warn",
  "no-wakeword": "warn",
  rejected: "error",
  invalid: "error",
};

export class CommandLog {
  private lines: LogLine[] = [];

  constructor(readonly capacity = 50) {}

  /** Fold a gateway event in; non-command events are ignored. */
  push(event: GatewayEvent): void {
    if (event.type !== "command") return;
    const suffix = event.detail ? ` (${event.detail})` : "";
    this.lines.unshift({
      seq: event.seq,
      label: `[${event.stage}] ${event.outcome}${suffix}`,
      tone: TONE[event.outcome],
    });
    if (this.lines.length > this.capacity) this.lines.length = this.capacity;
  }

  get entries(): readonly LogLine[] {
    return this.lines;
  }
}
