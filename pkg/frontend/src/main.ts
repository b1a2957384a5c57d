/**
 * Console entry point: fetch the session config, open the WebSocket, wire
 * pointer capture -> scaling controller -> telecommand stream, and render.
 */

import { ScalingController, ScalingParams } from "./controller.js";
import { PointerResampler, attachClutchKey, ClutchKeyState } from "./input.js";
import { buildExport, renderExport, ServerMetrics } from "./metrics.js";
import { applyTextFrame, newSessionView } from "./session.js";
import { drawFrame, TaskOverlay, WorldTransform } from "./render.js";
import { decodeMessage, encodeTelecommand } from "./wire.js";

interface BridgeConfig {
  label: string;
  tick_hz: number;
  scaling: { gamma_c: number; gamma_v: number };
  channel: { one_way_delay_ticks: number };
  task: { waypoints: number[][]; tolerance_m: number };
}

const METERS_PER_PIXEL = 0.001; // 1 px = 1 mm: desk-scale tasks fill the canvas

async function start(): Promise<void> {
  const canvas = document.getElementById("scene") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const exportPane = document.getElementById("export") as HTMLPreElement;

  const base = location.host || "127.0.0.1:8765";
  const cfg: BridgeConfig = await (await fetch(`http://${base}/session/config`)).json();
  const params: ScalingParams = { gammaC: cfg.scaling.gamma_c, gammaV: cfg.scaling.gamma_v };
  const dt = 1 / cfg.tick_hz;

  const view = newSessionView();
  view.delayTicks = cfg.channel.one_way_delay_ticks;
  view.tickHz = cfg.tick_hz;
  view.scalingLabel = cfg.label;

  const task: TaskOverlay = {
    waypoints: cfg.task.waypoints.map((w) => [w[0], w[1], w[2] ?? 0]),
    toleranceM: cfg.task.tolerance_m,
  };
  const transform: WorldTransform = {
    metersPerPixel: METERS_PER_PIXEL,
    originPx: [canvas.width / 3, canvas.height / 2],
  };

  const controller = new ScalingController(params, dt);
  const resampler = new PointerResampler(METERS_PER_PIXEL, cfg.tick_hz);
  const clutch: ClutchKeyState = { held: false };
  attachClutchKey(window, clutch);

  const ws = new WebSocket(`ws://${base}/session/ws`);
  ws.binaryType = "arraybuffer";

  ws.onmessage = async (ev: MessageEvent) => {
    const nowMs = performance.now();
    if (typeof ev.data === "string") {
      const doc = applyTextFrame(view, ev.data);
      if (doc.type === "task" && doc.done && view.sessionId) {
        const metrics: ServerMetrics = await (
          await fetch(`http://${base}/session/${view.sessionId}/metrics`)
        ).json();
        const logRef = `session_${view.sessionId}.tlog`;
        exportPane.textContent = renderExport(
          buildExport(view.sessionId, metrics, logRef),
        );
      }
      return;
    }
    const msg = decodeMessage(new Uint8Array(ev.data as ArrayBuffer));
    if (msg.kind === "feedback") {
      view.follower.onFeedback(msg, nowMs);
      view.lag.onFeedback(msg.position, nowMs);
    }
  };

  canvas.addEventListener("pointermove", (ev) => {
    const rect = canvas.getBoundingClientRect();
    resampler.pushPointer(
      ev.clientX - rect.left - transform.originPx[0],
      ev.clientY - rect.top - transform.originPx[1],
    );
  });
  canvas.addEventListener("wheel", (ev) => {
    resampler.pushDepth(ev.deltaY * 1e-5);
    ev.preventDefault();
  });

  // input pump: resample pointer motion to the bridge tick rate
  setInterval(() => {
    if (ws.readyState !== WebSocket.OPEN) return;
    const nowMs = performance.now();
    for (const [tick, pos] of resampler.sample(nowMs)) {
      const cmd = controller.step(pos, tick, clutch.held);
      view.masterPos = pos;
      view.clutched = controller.clutchEngaged;
      view.gamma = controller.lastGamma;
      if (view.timerStartMs === null && !controller.clutchEngaged) {
        view.timerStartMs = nowMs;
      }
      view.lag.onCommand(cmd.delta, nowMs);
      ws.send(encodeTelecommand(cmd));
    }
    ws.send(JSON.stringify({ type: "gamma", value: controller.lastGamma }));
  }, 8);

  const renderLoop = () => {
    const nowMs = performance.now();
    view.degraded = view.follower.isStale(nowMs);
    drawFrame(ctx, view, task, transform, nowMs);
    requestAnimationFrame(renderLoop);
  };
  requestAnimationFrame(renderLoop);
}

start().catch((err) => {
  const pane = document.getElementById("export");
  if (pane) pane.textContent = `failed to start session: ${err}`;
});
