/** Shapes of the gateway's HTTP and WebSocket payloads. */

export interface RobotModel {
  /** Modified-DH rows, one per joint: [a, d, alpha]. */
  dh: number[][];
  /** Fixed flange frame after the last joint: [a, d, alpha, theta]. */
  flange: [number, number, number, number];
  /** Per-joint [lower, upper] limits in radians. */
  limits: number[][];
  home_q: number[];
}

export interface StateSnapshot {
  session: string;
  state: "unspawned" | "ready" | "executing";
  mode: "puppeteer" | "idle";
  q: number[];
  ee: number[];
  base: number[];
  target: string | null;
  robot: RobotModel;
  targets: Record<string, number[]>;
  tutorial_mode: boolean;
}

export interface PoseEvent {
  type: "pose";
  session: string;
  seq: number;
  ts: number;
  q: number[];
  ee: number[];
  t: number;
}

export interface StateEvent {
  type: "state";
  session: string;
  seq: number;
  ts: number;
  value: string;
}

export interface CommandEvent {
  type: "command";
  session: string;
  seq: number;
  ts: number;
  stage: "gate" | "mode" | "quick" | "llm";
  outcome: "no-wakeword" | "rejected" | "valid" | "invalid" | "uncertain";
  text?: string;
  detail?: string;
}

export type GatewayEvent = PoseEvent | StateEvent | CommandEvent;

export function isGatewayEvent(value: unknown): value is GatewayEvent {
  if (typeof value !== "object" || value === null) return false;
  const v = value as Record<string, unknown>;
  return (
    (v.type === "pose" || v.type === "state" || v.type === "command") &&
    typeof v.session === "string" &&
    typeof v.seq === "number"
  );
}
