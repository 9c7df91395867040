/**
 * Trajectory playback scheduling: map simulation steps (fixed dt) onto
 * presentation timestamps at a chosen wall-clock rate.
 */

import { Pose } from "./editor.js";

/** Simulation tick length in seconds; matches the service's physics. */
export const SIM_DT = 0.1;

export interface Frame {
  /** Presentation time offset in seconds from playback start. */
  readonly t: number;
  readonly pose: Pose;
}

/**
 * rate 1.0 plays in real time; 2.0 plays twice as fast. Timestamps are
 * strictly monotone and the final pose is always the last frame.
 */
export function playbackSchedule(trajectory: readonly Pose[], rate = 1.0): Frame[] {
  if (trajectory.length === 0) throw new Error("empty trajectory");
  if (!Number.isFinite(rate) || rate <= 0) throw new RangeError(`rate must be positive, got ${rate}`);
  return trajectory.map((pose, i) => ({ t: (i * SIM_DT) / rate, pose }));
}
