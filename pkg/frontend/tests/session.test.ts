import { describe, expect, it } from "vitest";

import { buildExport, renderExport, formatTimer } from "../src/metrics.js";
import { FollowerView, MotionLagMeter, applyTextFrame, newSessionView } from "../src/session.js";
import { hudLines } from "../src/render.js";
import { Feedback } from "../src/wire.js";

function fb(sendTick: number, x: number): Feedback {
  return {
    kind: "feedback",
    seq: sendTick,
    sendTick,
    position: [x, 0, 0],
    orientation: [1, 0, 0, 0],
    frameId: sendTick,
  };
}

describe("FollowerView (honest delay)", () => {
  it("renders nothing before the first feedback", () => {
    const view = new FollowerView();
    expect(view.poseAt(123)).toBeNull();
  });

  it("always returns the last received pose, never extrapolated", () => {
    const view = new FollowerView();
    view.onFeedback(fb(100, 0.01), 1000);
    view.onFeedback(fb(120, 0.02), 1020);
    // much later, with the follower presumably still moving server-side,
    // the rendered pose is still the delayed sample we actually received
    const snap = view.poseAt(5000);
    expect(snap?.position[0]).toBe(0.02);
    expect(snap?.sendTick).toBe(120);
    expect(snap?.receivedAtMs).toBe(1020);
  });

  it("flags a degraded link after 2 s without feedback", () => {
    const view = new FollowerView();
    view.onFeedback(fb(1, 0), 1000);
    expect(view.isStale(2999)).toBe(false);
    expect(view.isStale(3001)).toBe(true);
  });

  it("measures the feedback leg in server ticks", () => {
    const view = new FollowerView();
    view.onFeedback(fb(700, 0), 0);
    expect(view.fbLegTicks(950)).toBe(250);
  });
});

describe("MotionLagMeter", () => {
  it("measures command-to-feedback motion onset (500 ms round trip)", () => {
    const meter = new MotionLagMeter();
    // still period with feedback flowing
    for (let t = 0; t < 1000; t += 16) {
      meter.onCommand([0, 0, 0], t);
      meter.onFeedback([0, 0, 0], t);
    }
    meter.onCommand([0.001, 0, 0], 1000); // motion starts
    for (let t = 1016; t < 1500; t += 16) {
      meter.onCommand([0.001, 0, 0], t);
      meter.onFeedback([0, 0, 0], t); // follower still: commands in flight
    }
    meter.onFeedback([0.0003, 0, 0], 1500); // first moved feedback
    expect(meter.lastLagMs).toBe(500);
  });

  it("lag quantization stays within one frame of feedback cadence", () => {
    const frameMs = 16;
    const meter = new MotionLagMeter();
    meter.onFeedback([0, 0, 0], 0);
    meter.onCommand([0, 0, 0], 0);
    meter.onCommand([0.001, 0, 0], 7); // onset between frames
    let measured: number | null = null;
    for (let t = frameMs; t <= 800; t += frameMs) {
      meter.onFeedback(t >= 507 ? [0.001, 0, 0] : [0, 0, 0], t);
      if (meter.lastLagMs !== null) {
        measured = meter.lastLagMs;
        break;
      }
    }
    expect(measured).not.toBeNull();
    expect(Math.abs((measured as number) - 500)).toBeLessThanOrEqual(frameMs);
  });
});

describe("text frames and HUD", () => {
  it("applies hello, status and task frames", () => {
    const view = newSessionView();
    applyTextFrame(view, JSON.stringify({ type: "hello", session: "s1", log: "x.tlog" }));
    expect(view.sessionId).toBe("s1");
    applyTextFrame(
      view,
      JSON.stringify({
        type: "status",
        session: "s1",
        tick: 1234,
        label: "velocity",
        gamma: 0.17,
        delay_ticks: 250,
        tick_hz: 1000,
        task_index: 1,
        task_done: false,
      }),
    );
    expect(view.serverTick).toBe(1234);
    expect(view.gamma).toBe(0.17);
    expect(view.delayTicks).toBe(250);
    applyTextFrame(view, JSON.stringify({ type: "task", done: true, completion_tick: 4299 }));
    expect(view.taskDone).toBe(true);
    expect(view.completionTick).toBe(4299);
  });

  it("HUD shows the configured round trip and scaling label", () => {
    const view = newSessionView();
    view.scalingLabel = "normal";
    view.gamma = 0.3;
    view.delayTicks = 250;
    view.tickHz = 1000;
    const lines = hudLines(view, 0).join("\n");
    expect(lines).toContain("round trip (configured): 500 ms");
    expect(lines).toContain("config: normal");
    view.degraded = true;
    expect(hudLines(view, 0).join("\n")).toContain("LINK DEGRADED");
  });
});

describe("session export", () => {
  const metrics = {
    task: "reach-line-60mm",
    config: "ui",
    time_s: 4.299,
    dist_left_m: 0.06,
    dist_right_m: null,
  };

  it("renders the server-supplied metrics with the log reference", () => {
    const text = renderExport(buildExport("s1", metrics, "session_s1.tlog"));
    expect(text).toContain("session s1");
    expect(text).toContain("session_s1.tlog (replayable)");
    expect(text).toContain("reach-line-60mm,ui,4.299,0.06,");
  });

  it("exporting twice is identical", () => {
    const a = renderExport(buildExport("s1", metrics, "log"));
    const b = renderExport(buildExport("s1", metrics, "log"));
    expect(a).toBe(b);
  });

  it("marks abandoned tasks incomplete without a time", () => {
    const text = renderExport(
      buildExport("s2", { ...metrics, time_s: null }, "log"),
    );
    expect(text).toContain("incomplete");
  });

  it("formats the timer", () => {
    expect(formatTimer(0)).toBe("0:00");
    expect(formatTimer(61_000)).toBe("1:01");
  });
});
