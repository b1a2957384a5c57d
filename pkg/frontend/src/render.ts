/**
 * Canvas rendering: undelayed master cursor, delayed follower, waypoint
 * overlays and the HUD.  Pure drawing; all state lives in SessionView.
 */

import { SessionView } from "./session.js";
import { Vec3 } from "./wire.js";

export interface WorldTransform {
  metersPerPixel: number;
  originPx: [number, number];
}

export function worldToPx(t: WorldTransform, p: Vec3): [number, number] {
  return [t.originPx[0] + p[0] / t.metersPerPixel, t.originPx[1] + p[1] / t.metersPerPixel];
}

export interface TaskOverlay {
  waypoints: Vec3[];
  toleranceM: number;
}

export function drawFrame(
  ctx: CanvasRenderingContext2D,
  view: SessionView,
  task: TaskOverlay | null,
  transform: WorldTransform,
  nowMs: number,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, width, height);

  if (task) {
    ctx.strokeStyle = "#3b5b46";
    ctx.fillStyle = "#7fd49a";
    task.waypoints.forEach((w, i) => {
      const [x, y] = worldToPx(transform, w);
      const r = Math.max(4, task.toleranceM / transform.metersPerPixel);
      ctx.beginPath();
      ctx.arc(x, y, r, 0, Math.PI * 2);
      ctx.stroke();
      ctx.fillStyle = i < view.taskIndex ? "#2e7d32" : "#7fd49a";
      ctx.fillText(String(i + 1), x + r + 3, y - 3);
    });
  }

  // follower: delayed pose only, never extrapolated
  const fb = view.follower.poseAt(nowMs);
  if (fb) {
    const [x, y] = worldToPx(transform, fb.position);
    ctx.strokeStyle = "#e0b84c";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(x, y, 9, 0, Math.PI * 2);
    ctx.stroke();
    ctx.lineWidth = 1;
  }

  // master cursor: local, undelayed
  const [mx, my] = worldToPx(transform, view.masterPos);
  ctx.strokeStyle = view.clutched ? "#888888" : "#6fb7ff";
  ctx.beginPath();
  ctx.moveTo(mx - 10, my);
  ctx.lineTo(mx + 10, my);
  ctx.moveTo(mx, my - 10);
  ctx.lineTo(mx, my + 10);
  ctx.stroke();

  drawHud(ctx, view, nowMs);
}

export function hudLines(view: SessionView, nowMs: number): string[] {
  const lag = view.lag.lastLagMs;
  const fbLeg = view.follower.fbLegTicks(view.serverTick);
  const rtMs = (2 * view.delayTicks * 1000) / view.tickHz;
  const timer =
    view.timerStartMs === null ? "0:00" : formatElapsed(nowMs - view.timerStartMs);
  const lines = [
    `config: ${view.scalingLabel || "?"}  gamma: ${view.gamma.toFixed(3)}`,
    `round trip (configured): ${rtMs.toFixed(0)} ms` +
      (lag !== null ? `  measured: ${lag.toFixed(0)} ms` : ""),
    `feedback leg: ${fbLeg === null ? "-" : fbLeg + " ticks"}`,
    `clutch: ${view.clutched ? "ENGAGED" : "free"}   timer: ${timer}`,
    `task: ${view.taskDone ? "done" : `waypoint ${view.taskIndex + 1}`}`,
  ];
  if (view.degraded) lines.push("LINK DEGRADED: feedback stale > 2 s");
  return lines;
}

function formatElapsed(ms: number): string {
  const s = Math.floor(ms / 1000);
  return `${Math.floor(s / 60)}:${String(s % 60).padStart(2, "0")}`;
}

function drawHud(ctx: CanvasRenderingContext2D, view: SessionView, nowMs: number): void {
  ctx.fillStyle = view.degraded ? "#ff7b72" : "#c9d1d9";
  ctx.font = "13px monospace";
  hudLines(view, nowMs).forEach((line, i) => ctx.fillText(line, 12, 20 + i * 17));
}
