import { describe, expect, it } from "vitest";

import { DEFAULT_GAIN_MM_PER_PX, TeleopInput } from "../src/input.js";

function pose(cmd: ReturnType<TeleopInput["poseCommand"]>) {
  if (cmd.type !== "teleop_pose") throw new Error("expected a teleop_pose");
  return cmd;
}

describe("teleop input mapping", () => {
  it("maps a right drag to +x device motion at the default gain", () => {
    const input = new TeleopInput();
    const cmd = pose(input.drag(100, 0));
    expect(cmd.position_mm).toEqual([100 * DEFAULT_GAIN_MM_PER_PX, 0, 0]);
  });

  it("maps an upward drag to +y (screen y grows downward)", () => {
    const input = new TeleopInput();
    const cmd = pose(input.drag(0, -50));
    expect(cmd.position_mm![1]).toBeCloseTo(50 * DEFAULT_GAIN_MM_PER_PX, 12);
  });

  it("maps wheel steps to the screen normal", () => {
    const input = new TeleopInput();
    const cmd = pose(input.wheel(3));
    expect(cmd.position_mm).toEqual([0, 0, 3]);
  });

  it("holds the last pose with no input", () => {
    const input = new TeleopInput();
    input.drag(10, -20);
    input.wheel(1);
    const a = pose(input.poseCommand());
    const b = pose(input.poseCommand());
    expect(a).toEqual(b);
  });

  it("twist drag changes orientation, not position", () => {
    const input = new TeleopInput();
    const cmd = pose(input.drag(40, 0, true));
    expect(cmd.position_mm).toEqual([0, 0, 0]);
    expect(cmd.quat_wxyz![0]).toBeLessThan(1); // rotated away from identity
    const [w, x, y, z] = cmd.quat_wxyz!;
    expect(Math.hypot(w, x, y, z)).toBeCloseTo(1, 12);
  });

  it("adjustable gain changes the translation scale", () => {
    const input = new TeleopInput();
    input.gainMmPerPx = 0.5;
    const cmd = pose(input.drag(10, 0));
    expect(cmd.position_mm![0]).toBeCloseTo(5, 12);
  });

  it("button key maps to the stylus button", () => {
    const input = new TeleopInput();
    expect(pose(input.setButton(true)).button).toBe(true);
    expect(pose(input.setButton(false)).button).toBe(false);
  });

  it("clutch key toggles clutch commands", () => {
    const input = new TeleopInput();
    expect(input.toggleClutch()).toEqual({ type: "clutch", engaged: true });
    expect(input.toggleClutch()).toEqual({ type: "clutch", engaged: false });
    expect(input.clutch).toBe(false);
  });
});
