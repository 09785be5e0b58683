// Canvas drawing. Every pose drawn here came from a server frame via the
// HUD reducer; nothing on this path integrates physics locally.

import type { HudState } from "./hud.js";
import { toScreen, lengthToPx, type Viewport } from "./transform.js";

export interface WorldGeom {
  W: number;
  H: number;
  goalX: number;
  goalY: number;
  goalR: number;
}

export function flameLen(u: number, maxMeters: number): number {
  return Math.max(0, Math.min(1, Math.abs(u))) * maxMeters;
}

const BODY_H = 1.1; // meters, drawing size only
const BODY_W = 0.8;

export function drawCockpit(
  ctx: CanvasRenderingContext2D,
  hud: HudState,
  vp: Viewport,
  geom: WorldGeom,
): void {
  const W = ctx.canvas.width, H = ctx.canvas.height;
  ctx.clearRect(0, 0, W, H);
  ctx.fillStyle = "#0b0e14";
  ctx.fillRect(0, 0, W, H);

  // domain border
  const [dx0, dy0] = toScreen(vp, 0, geom.H);
  ctx.strokeStyle = "#2a3142";
  ctx.lineWidth = 1;
  ctx.strokeRect(dx0, dy0, lengthToPx(vp, geom.W), lengthToPx(vp, geom.H));

  // goal circle
  const [gx, gy] = toScreen(vp, geom.goalX, geom.goalY);
  ctx.beginPath();
  ctx.arc(gx, gy, lengthToPx(vp, geom.goalR), 0, Math.PI * 2);
  ctx.strokeStyle = "#39d98a";
  ctx.lineWidth = 2;
  ctx.stroke();

  const frame = hud.frame;
  if (frame) {
    const [x, y, theta] = frame.state;
    const [cx, cy] = toScreen(vp, x, y);
    ctx.save();
    ctx.translate(cx, cy);
    ctx.rotate(-theta); // world theta is counterclockwise, canvas y is down

    const h = lengthToPx(vp, BODY_H), w = lengthToPx(vp, BODY_W);
    const [uMain, uRot] = frame.u_applied;

    // main flame under the base, side flame at the active thruster
    if (uMain > 0) {
      flame(ctx, 0, h / 2, 0, lengthToPx(vp, flameLen(uMain, 1.6)), w * 0.35);
    }
    if (uRot !== 0) {
      const side = uRot > 0 ? -1 : 1; // flame opposite the push
      flame(ctx, (side * w) / 2, 0, side * lengthToPx(vp, flameLen(uRot, 0.9)), 0, w * 0.2);
    }

    // body triangle, nose up
    ctx.beginPath();
    ctx.moveTo(0, -h / 2);
    ctx.lineTo(w / 2, h / 2);
    ctx.lineTo(-w / 2, h / 2);
    ctx.closePath();
    ctx.fillStyle = "#c9d4e3";
    ctx.fill();
    ctx.restore();
  }

  drawChannels(ctx, hud);
  drawHudText(ctx, hud, W);

  if (hud.connection !== "open") {
    ctx.fillStyle = "rgba(6, 8, 12, 0.78)";
    ctx.fillRect(0, 0, W, H);
  }
}

function flame(
  ctx: CanvasRenderingContext2D,
  x: number,
  y: number,
  dx: number,
  dy: number,
  width: number,
): void {
  ctx.beginPath();
  ctx.moveTo(x - (dy !== 0 ? width / 2 : 0), y - (dx !== 0 ? width / 2 : 0));
  ctx.lineTo(x + (dy !== 0 ? width / 2 : 0), y + (dx !== 0 ? width / 2 : 0));
  ctx.lineTo(x + dx, y + dy);
  ctx.closePath();
  ctx.fillStyle = "#ff8b3d";
  ctx.fill();
}

const CHANNELS: { label: string; index: 0 | 1 }[] = [
  { label: "MAIN", index: 0 },
  { label: "ROT", index: 1 },
];

// Two input channels bottom-left: hollow bar = what the pilot asked for,
// filled bar = what the autonomy let through. A blocked channel (applied 0,
// asked nonzero) flashes red the tick it happens.
function drawChannels(ctx: CanvasRenderingContext2D, hud: HudState): void {
  const frame = hud.frame;
  if (!frame) return;
  const baseY = ctx.canvas.height - 30;
  const barW = 90, barH = 10;
  CHANNELS.forEach(({ label, index }, row) => {
    const y = baseY - row * 22;
    const user = frame.u_user[index];
    const applied = frame.u_applied[index];
    const blocked = hud.blocked[index];
    ctx.font = "11px monospace";
    ctx.fillStyle = "#8fa0b8";
    ctx.fillText(label, 14, y + barH - 1);
    const x0 = 55 + barW / 2; // bars grow from the center for signed values
    ctx.strokeStyle = "#4a5568";
    ctx.strokeRect(55, y, barW, barH);
    ctx.fillStyle = "#5a6e8c";
    ctx.fillRect(x0, y + 1, (user * barW) / 2, barH - 2);
    ctx.fillStyle = "#39d98a";
    ctx.fillRect(x0, y + 3, (applied * barW) / 2, barH - 6);
    if (blocked && Math.floor(frame.t * 4) % 2 === 0) {
      ctx.strokeStyle = "#ff4d5e";
      ctx.lineWidth = 2;
      ctx.strokeRect(53, y - 2, barW + 4, barH + 4);
      ctx.lineWidth = 1;
      ctx.fillStyle = "#ff4d5e";
      ctx.fillText("BLOCKED", 55 + barW + 8, y + barH - 1);
    }
  });
}

function drawHudText(ctx: CanvasRenderingContext2D, hud: HudState, W: number) {
  ctx.font = "12px monospace";
  ctx.fillStyle = "#c9d4e3";
  const lines: string[] = [];
  lines.push(`paradigm  ${hud.paradigm ?? "-"}`);
  lines.push(`status    ${hud.status}`);
  if (hud.frame) lines.push(`t         ${hud.frame.t.toFixed(2)} s`);
  if (hud.agreementPct !== null) lines.push(`agreement ${hud.agreementPct.toFixed(1)} %`);
  if (hud.end) {
    const m = hud.end.metrics;
    lines.push(`result    ${hud.end.outcome.status} in ${hud.end.outcome.steps} steps`);
    lines.push(`time      ${m.time.toFixed(2)} s`);
    lines.push(`path      ${m.path_length.toFixed(2)} m`);
    lines.push(`cost      ${m.total_cost.toFixed(1)}`);
  }
  if (hud.error) lines.push(`error     ${hud.error}`);
  lines.forEach((line, i) => ctx.fillText(line, W - 230, 24 + i * 16));
}
