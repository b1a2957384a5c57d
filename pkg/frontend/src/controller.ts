/**
 * Master-side scaling control law, mirrored from the server package.
 *
 * Scaling is applied here, before the telecommand crosses the delayed
 * link: delta = gamma * (p_t - p_{t-1}) with
 * gamma = gammaC + gammaV * |smoothed master velocity|.  Orientation is
 * held at identity in UI sessions (pointer hardware has no 6-DOF), and
 * clutching emits zero-delta frames with a workspace reset on release.
 */

import { Telecommand, Vec3 } from "./wire.js";

export interface ScalingParams {
  gammaC: number;
  gammaV: number;
}

export function effectiveGamma(params: ScalingParams, speed: number): number {
  if (!Number.isFinite(speed) || speed < 0) {
    throw new Error(`master speed must be finite and >= 0, got ${speed}`);
  }
  return params.gammaC + params.gammaV * speed;
}

/** First-difference speed with exponential smoothing, s_0 = 0. */
export class SpeedEstimator {
  private prev: Vec3 | null = null;
  private smoothed = 0;

  constructor(
    public readonly dt: number,
    public readonly alpha = 0.2,
  ) {
    if (dt <= 0) throw new Error("dt must be > 0");
    if (alpha <= 0 || alpha > 1) throw new Error("alpha must be in (0, 1]");
  }

  get speed(): number {
    return this.smoothed;
  }

  update(p: Vec3): number {
    if (this.prev !== null) {
      const dx = (p[0] - this.prev[0]) / this.dt;
      const dy = (p[1] - this.prev[1]) / this.dt;
      const dz = (p[2] - this.prev[2]) / this.dt;
      const raw = Math.sqrt(dx * dx + dy * dy + dz * dz);
      this.smoothed += this.alpha * (raw - this.smoothed);
    }
    this.prev = [p[0], p[1], p[2]];
    return this.smoothed;
  }

  reset(): void {
    this.prev = null;
    this.smoothed = 0;
  }
}

const IDENTITY: [number, number, number, number] = [1, 0, 0, 0];

export class ScalingController {
  private prevPos: Vec3 | null = null;
  private clutched = false;
  private resetPending = false;
  private seq = 0;
  private estimator: SpeedEstimator;
  private gamma: number;

  constructor(
    private params: ScalingParams,
    dt: number,
    alpha = 0.2,
  ) {
    this.estimator = new SpeedEstimator(dt, alpha);
    this.gamma = params.gammaC;
  }

  get lastGamma(): number {
    return this.gamma;
  }

  get clutchEngaged(): boolean {
    return this.clutched;
  }

  get nextSeq(): number {
    return this.seq;
  }

  /** Swap scaling parameters live (the HUD logs the change server-side). */
  setParams(params: ScalingParams): void {
    this.params = params;
  }

  engageClutch(): void {
    this.clutched = true;
  }

  releaseClutch(): void {
    if (this.clutched) this.resetPending = true;
    this.clutched = false;
  }

  step(pos: Vec3, tick: number, clutch?: boolean, gripper = 0): Omit<Telecommand, "kind"> {
    if (clutch !== undefined) {
      if (clutch && !this.clutched) this.engageClutch();
      else if (!clutch && this.clutched) this.releaseClutch();
    }
    const speed = this.estimator.update(pos);
    this.gamma = effectiveGamma(this.params, speed);

    let delta: Vec3;
    if (this.prevPos === null || this.clutched || this.resetPending) {
      delta = [0, 0, 0];
      this.resetPending = false;
    } else {
      delta = [
        this.gamma * (pos[0] - this.prevPos[0]),
        this.gamma * (pos[1] - this.prevPos[1]),
        this.gamma * (pos[2] - this.prevPos[2]),
      ];
    }
    this.prevPos = [pos[0], pos[1], pos[2]];
    return {
      seq: this.seq++,
      sendTick: tick,
      delta,
      orientation: IDENTITY,
      gripper,
      clutched: this.clutched,
    };
  }
}
