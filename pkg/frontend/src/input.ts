/**
 * Mouse/keyboard teleoperation of the virtual stylus.
 *
 * Plain drag maps to screen-plane translation (+x right, +y up), the wheel
 * moves along the screen normal, and modifier-drag twists the stylus about
 * the screen axes. The mapped pose stream holds its last value when there is
 * no input. Clutch and button are key toggles so a drag can stay one-handed.
 */

import type { Command } from "./messages.js";

export const DEFAULT_GAIN_MM_PER_PX = 0.2;
export const WHEEL_GAIN_MM_PER_STEP = 1.0;
export const TWIST_RAD_PER_PX = 0.005;

interface Quat {
  w: number;
  x: number;
  y: number;
  z: number;
}

function quatMultiply(a: Quat, b: Quat): Quat {
  return {
    w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
    x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
    y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
    z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
  };
}

function quatFromAxisAngle(axis: [number, number, number], angle: number): Quat {
  const h = angle / 2;
  const s = Math.sin(h);
  return { w: Math.cos(h), x: axis[0] * s, y: axis[1] * s, z: axis[2] * s };
}

export class TeleopInput {
  gainMmPerPx = DEFAULT_GAIN_MM_PER_PX;
  private position: [number, number, number] = [0, 0, 0];
  private orientation: Quat = { w: 1, x: 0, y: 0, z: 0 };
  private button = false;
  private clutchEngaged = false;

  /** Drag by (dxPx, dyPx); `twist` switches to orientation mode. */
  drag(dxPx: number, dyPx: number, twist = false): Command {
    if (twist) {
      // horizontal drag yaws about screen-up, vertical drag pitches
      const yaw = quatFromAxisAngle([0, 0, 1], dxPx * TWIST_RAD_PER_PX);
      const pitch = quatFromAxisAngle([0, 1, 0], dyPx * TWIST_RAD_PER_PX);
      this.orientation = quatMultiply(quatMultiply(yaw, pitch), this.orientation);
      const n = Math.hypot(
        this.orientation.w,
        this.orientation.x,
        this.orientation.y,
        this.orientation.z,
      );
      this.orientation = {
        w: this.orientation.w / n,
        x: this.orientation.x / n,
        y: this.orientation.y / n,
        z: this.orientation.z / n,
      };
    } else {
      this.position = [
        this.position[0] + dxPx * this.gainMmPerPx,
        this.position[1] - dyPx * this.gainMmPerPx, // screen y grows downward
        this.position[2],
      ];
    }
    return this.poseCommand();
  }

  /** Wheel steps move along the screen normal (towards the viewer for up). */
  wheel(steps: number): Command {
    this.position = [
      this.position[0],
      this.position[1],
      this.position[2] + steps * WHEEL_GAIN_MM_PER_STEP,
    ];
    return this.poseCommand();
  }

  setButton(down: boolean): Command {
    this.button = down;
    return this.poseCommand();
  }

  toggleClutch(): Command {
    this.clutchEngaged = !this.clutchEngaged;
    return { type: "clutch", engaged: this.clutchEngaged };
  }

  get clutch(): boolean {
    return this.clutchEngaged;
  }

  /** Current held pose; identical until the next input event. */
  poseCommand(): Command {
    return {
      type: "teleop_pose",
      position_mm: [...this.position],
      quat_wxyz: [this.orientation.w, this.orientation.x, this.orientation.y, this.orientation.z],
      button: this.button,
    };
  }
}
