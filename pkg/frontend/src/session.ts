/**
 * Session state: the honest-delay follower view and lag measurement.
 *
 * The follower is rendered strictly from received feedback frames; there
 * is no extrapolation or client-side prediction, so the configured channel
 * delay is visible exactly as an operator would experience it.
 */

import { Feedback, Quat, Vec3 } from "./wire.js";

export interface StatusFrame {
  type: "status";
  session: string;
  tick: number;
  label: string;
  gamma: number;
  delay_ticks: number;
  tick_hz: number;
  task_index: number;
  task_done: boolean;
}

export interface FollowerSnapshot {
  position: Vec3;
  orientation: Quat;
  sendTick: number;
  receivedAtMs: number;
}

export class FollowerView {
  private last: FollowerSnapshot | null = null;

  onFeedback(fb: Feedback, nowMs: number): void {
    this.last = {
      position: fb.position,
      orientation: fb.orientation,
      sendTick: fb.sendTick,
      receivedAtMs: nowMs,
    };
  }

  /** Last received pose, never extrapolated; null before first feedback. */
  poseAt(_nowMs: number): FollowerSnapshot | null {
    return this.last;
  }

  /** True when feedback is older than thresholdMs (link degraded). */
  isStale(nowMs: number, thresholdMs = 2000): boolean {
    if (this.last === null) return false;
    return nowMs - this.last.receivedAtMs > thresholdMs;
  }

  /** Feedback-leg latency in ticks, judged against the server clock. */
  fbLegTicks(serverTickNow: number): number | null {
    if (this.last === null) return null;
    return serverTickNow - this.last.sendTick;
  }
}

const STILL_EPS = 1e-9;

/**
 * Round-trip lag measured behaviorally: wall time from the first non-zero
 * commanded delta after stillness until the rendered follower starts
 * moving.  This is what the operator actually experiences (command leg +
 * feedback leg + servo).
 */
export class MotionLagMeter {
  private cmdOnsetMs: number | null = null;
  private cmdWasStill = true;
  private lastFbPos: Vec3 | null = null;
  private measurements: number[] = [];

  onCommand(delta: Vec3, nowMs: number): void {
    const moving =
      Math.abs(delta[0]) > STILL_EPS ||
      Math.abs(delta[1]) > STILL_EPS ||
      Math.abs(delta[2]) > STILL_EPS;
    if (moving && this.cmdWasStill && this.cmdOnsetMs === null) {
      this.cmdOnsetMs = nowMs;
    }
    this.cmdWasStill = !moving;
  }

  onFeedback(position: Vec3, nowMs: number): void {
    if (this.lastFbPos !== null && this.cmdOnsetMs !== null) {
      const moved =
        Math.abs(position[0] - this.lastFbPos[0]) > STILL_EPS ||
        Math.abs(position[1] - this.lastFbPos[1]) > STILL_EPS ||
        Math.abs(position[2] - this.lastFbPos[2]) > STILL_EPS;
      if (moved) {
        this.measurements.push(nowMs - this.cmdOnsetMs);
        this.cmdOnsetMs = null;
      }
    }
    this.lastFbPos = [position[0], position[1], position[2]];
  }

  get lastLagMs(): number | null {
    return this.measurements.length
      ? this.measurements[this.measurements.length - 1]
      : null;
  }

  get allLagsMs(): readonly number[] {
    return this.measurements;
  }
}

export interface SessionView {
  sessionId: string | null;
  masterPos: Vec3;
  follower: FollowerView;
  lag: MotionLagMeter;
  scalingLabel: string;
  gamma: number;
  delayTicks: number;
  tickHz: number;
  serverTick: number;
  clutched: boolean;
  taskIndex: number;
  taskDone: boolean;
  completionTick: number | null;
  timerStartMs: number | null;
  degraded: boolean;
}

export function newSessionView(): SessionView {
  return {
    sessionId: null,
    masterPos: [0, 0, 0],
    follower: new FollowerView(),
    lag: new MotionLagMeter(),
    scalingLabel: "",
    gamma: 0,
    delayTicks: 0,
    tickHz: 1000,
    serverTick: 0,
    clutched: false,
    taskIndex: 0,
    taskDone: false,
    completionTick: null,
    timerStartMs: null,
    degraded: false,
  };
}

/** Fold one server text frame into the view; returns the parsed doc. */
export function applyTextFrame(view: SessionView, text: string): Record<string, unknown> {
  const doc = JSON.parse(text) as Record<string, unknown>;
  switch (doc.type) {
    case "hello":
      view.sessionId = String(doc.session);
      break;
    case "status": {
      const st = doc as unknown as StatusFrame;
      view.serverTick = st.tick;
      view.scalingLabel = st.label;
      view.gamma = st.gamma;
      view.delayTicks = st.delay_ticks;
      view.tickHz = st.tick_hz;
      view.taskIndex = st.task_index;
      view.taskDone = st.task_done;
      break;
    }
    case "task":
      if (doc.done) {
        view.taskDone = true;
        view.completionTick = Number(doc.completion_tick);
      }
      break;
    default:
      break;
  }
  return doc;
}
