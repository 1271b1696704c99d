/** Control-panel actions, each mapped to one bridge command. */

import type { Command } from "./messages.js";

export const SCALE_LEVELS = ["rough", "medium", "fine", "screen"] as const;
export const FRAME_MODES = ["world", "screen", "user"] as const;
export const PIVOT_MODES = ["self_origin", "geometric_center", "user"] as const;
export const ROBOT_HANDLE_MODES = ["base", "tcpf"] as const;
export const MANNEQUIN_HANDLE_MODES = [
  "whole_body",
  "left_hand",
  "right_hand",
  "both_hands",
] as const;
export const RECORD_MODES = ["manual", "auto_time", "auto_distance"] as const;

export function selectEntity(name: string | null): Command {
  return { type: "select", name };
}

export function setHandleMode(mode: string): Command {
  return { type: "handle_mode", mode };
}

export function setPivotMode(mode: (typeof PIVOT_MODES)[number]): Command {
  return { type: "pivot", mode };
}

export function setScaleLevel(level: (typeof SCALE_LEVELS)[number]): Command {
  return { type: "scale", level };
}

export function setFrameMode(mode: (typeof FRAME_MODES)[number]): Command {
  return { type: "frame", mode };
}

/** factor > 1 zooms in (visible world span shrinks). */
export function zoom(factor: number): Command {
  if (!(factor > 0)) throw new Error("zoom factor must be positive");
  return { type: "zoom", factor };
}

export function startRecording(
  mode: (typeof RECORD_MODES)[number],
  intervalMs = 500,
  intervalMm = 10,
): Command {
  return {
    type: "record",
    action: "start",
    mode,
    interval_ms: intervalMs,
    interval_mm: intervalMm,
  };
}

export function stopRecording(): Command {
  return { type: "record", action: "stop" };
}
