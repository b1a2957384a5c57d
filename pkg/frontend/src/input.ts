/**
 * Pointer-to-master-stream resampling.
 *
 * Pointer events arrive whenever the browser feels like it; the bridge
 * wants one master sample per tick.  The resampler zero-order-holds the
 * latest pointer position and emits one position per elapsed tick.  Pixels
 * map to meters through metersPerPixel; the wheel drives the optional
 * depth axis; the clutch key maps to the controller's engage/release.
 */

import { Vec3 } from "./wire.js";

export class PointerResampler {
  private px = 0;
  private py = 0;
  private depth = 0;
  private lastTick: number | null = null;
  private anchorMs: number | null = null;

  constructor(
    public readonly metersPerPixel: number,
    public readonly tickHz: number,
  ) {
    if (metersPerPixel <= 0) throw new Error("metersPerPixel must be > 0");
    if (tickHz <= 0) throw new Error("tickHz must be > 0");
  }

  /** Latest pointer position in canvas pixels (origin anywhere fixed). */
  pushPointer(xPx: number, yPx: number): void {
    this.px = xPx;
    this.py = yPx;
  }

  /** Wheel steps adjust the depth axis, already converted to meters. */
  pushDepth(deltaMeters: number): void {
    this.depth += deltaMeters;
  }

  get position(): Vec3 {
    return [this.px * this.metersPerPixel, this.py * this.metersPerPixel, this.depth];
  }

  /**
   * Positions for every tick that elapsed since the last call (empty if
   * less than one tick passed).  Returns [tick, position] pairs.
   */
  sample(nowMs: number): Array<[number, Vec3]> {
    if (this.anchorMs === null) {
      this.anchorMs = nowMs;
      this.lastTick = 0;
      return [[0, this.position]];
    }
    const targetTick = Math.floor(((nowMs - this.anchorMs) / 1000) * this.tickHz);
    const out: Array<[number, Vec3]> = [];
    let tick = this.lastTick as number;
    while (tick < targetTick) {
      tick += 1;
      out.push([tick, this.position]);
    }
    this.lastTick = tick;
    return out;
  }
}

export interface ClutchKeyState {
  held: boolean;
}

/** Space (configurable) held = clutch engaged. */
export function attachClutchKey(
  target: { addEventListener: Function },
  state: ClutchKeyState,
  key = " ",
): void {
  target.addEventListener("keydown", (ev: KeyboardEvent) => {
    if (ev.key === key) {
      state.held = true;
      ev.preventDefault();
    }
  });
  target.addEventListener("keyup", (ev: KeyboardEvent) => {
    if (ev.key === key) {
      state.held = false;
      ev.preventDefault();
    }
  });
}
