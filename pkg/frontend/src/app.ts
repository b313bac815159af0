/** Operator console: wires the gateway client, the event stream and the
 * canvas renderer to the DOM. Loaded as a module from index.html. */

import { GatewayClient } from "./client.js";
import { CommandLog } from "./commandlog.js";
import { chainPositions, type Vec3 } from "./kinematics.js";
import { project, type View } from "./projection.js";
import { EventStream } from "./stream.js";
import type { StateSnapshot } from "./types.js";

const SESSION = "console";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function drawView(
  canvas: HTMLCanvasElement,
  view: View,
  snapshot: StateSnapshot,
  q: number[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const viewport = { width: canvas.width, height: canvas.height };

  // target pads
  for (const [color, pos] of Object.entries(snapshot.targets)) {
    const [[x, y]] = project([pos as Vec3], view, viewport);
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(x, y, 6, 0, 2 * Math.PI);
    ctx.fill();
  }

  // the arm as a polyline through every frame origin
  const points = project(chainPositions(snapshot.robot, q), view, viewport);
  ctx.strokeStyle = "#d8dee9";
  ctx.lineWidth = 3;
  ctx.lineJoin = "round";
  ctx.beginPath();
  points.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.stroke();
  ctx.fillStyle = "#88c0d0";
  for (const [x, y] of points) {
    ctx.beginPath();
    ctx.arc(x, y, 3.5, 0, 2 * Math.PI);
    ctx.fill();
  }
}

/** Gateway base URL: ?gateway=http://host:port, else the page's own origin. */
function gatewayBase(): string {
  const param = new URLSearchParams(window.location.search).get("gateway");
  return (param ?? window.location.origin).replace(/\/$/, "");
}

async function main(): Promise<void> {
  const client = new GatewayClient(gatewayBase());
  const log = new CommandLog();
  const logList = el<HTMLUListElement>("command-log");
  const statusBadge = el<HTMLSpanElement>("conn-status");
  const stateBadge = el<HTMLSpanElement>("robot-state");
  const input = el<HTMLInputElement>("command-input");
  const sideCanvas = el<HTMLCanvasElement>("view-side");
  const topCanvas = el<HTMLCanvasElement>("view-top");

  let snapshot = await client.state(SESSION);
  let q = snapshot.q;

  const redraw = () => {
    drawView(sideCanvas, "side", snapshot, q);
    drawView(topCanvas, "top", snapshot, q);
  };

  const renderLog = () => {
    logList.replaceChildren(
      ...log.entries.map((line) => {
        const item = document.createElement("li");
        item.textContent = line.label;
        item.className = line.tone;
        return item;
      }),
    );
  };

  // palette chips: one click per color sends the canonical command
  const palette = el<HTMLDivElement>("palette");
  for (const color of Object.keys(snapshot.targets)) {
    const chip = document.createElement("button");
    chip.className = "chip";
    chip.style.background = color;
    chip.title = `move to ${color}`;
    chip.onclick = () => client.command(SESSION, `blueberry move to ${color}`);
    palette.appendChild(chip);
  }

  el<HTMLButtonElement>("spawn-btn").onclick = async () => {
    await client.spawn(SESSION, [0, 0, 0]);
    snapshot = await client.state(SESSION);
    q = snapshot.q;
    redraw();
  };

  el<HTMLFormElement>("command-form").onsubmit = (ev) => {
    ev.preventDefault();
    const text = input.value.trim();
    if (text) void client.command(SESSION, text);
    input.value = "";
  };

  const stream = new EventStream(client.eventsUrl, {
    onEvent: (event) => {
      if (event.session !== SESSION) return;
      if (event.type === "pose") {
        q = event.q;
        redraw();
      } else if (event.type === "state") {
        stateBadge.textContent = event.value;
      } else {
        log.push(event);
        renderLog();
      }
    },
    onStatus: (status) => {
      statusBadge.textContent = status;
      statusBadge.className = status;
    },
  });
  stream.start();

  stateBadge.textContent = snapshot.state;
  redraw();
}

void main();
