import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { parseStateMessage } from "../src/messages.js";
import { projectState } from "../src/viewState.js";
import {
  ARROW_MAX_LENGTH_MM,
  COLOR_CONTACT,
  COLOR_IDLE,
  COLOR_SATURATED,
  COLOR_SELECTED,
  entityColor,
  forceArrowColor,
  forceArrowLengthMm,
  statusLines,
} from "../src/render.js";

const golden = readFileSync(
  join(dirname(fileURLToPath(import.meta.url)), "golden", "state-stream.jsonl"),
  "utf-8",
)
  .split("\n")
  .filter((l) => l.trim())
  .map((l) => parseStateMessage(JSON.parse(l))!);

describe("render feedback", () => {
  it("draws no arrow at zero force", () => {
    const calm = golden.find((f) => f.force.magnitude_n === 0)!;
    expect(forceArrowLengthMm(projectState(calm).forceArrow)).toBe(0);
  });

  it("scales the arrow with force and saturates at the peak", () => {
    const half = { visible: true, direction: [1, 0, 0] as [number, number, number], lengthFraction: 0.5, saturated: false };
    expect(forceArrowLengthMm(half)).toBeCloseTo(ARROW_MAX_LENGTH_MM / 2, 12);
    const full = { ...half, lengthFraction: 1, saturated: true };
    expect(forceArrowLengthMm(full)).toBe(ARROW_MAX_LENGTH_MM);
    expect(forceArrowColor(full)).toBe(COLOR_SATURATED);
    expect(forceArrowColor(half)).toBe(COLOR_CONTACT);
  });

  it("tints contact over selection over idle", () => {
    const base = { name: "e", kind: "solid" as const, pose: { position_mm: [0, 0, 0] as [number, number, number], quat_wxyz: [1, 0, 0, 0] as [number, number, number, number] }, q: [] };
    expect(entityColor({ ...base, selected: false, inContact: false })).toBe(COLOR_IDLE);
    expect(entityColor({ ...base, selected: true, inContact: false })).toBe(COLOR_SELECTED);
    expect(entityColor({ ...base, selected: true, inContact: true })).toBe(COLOR_CONTACT);
  });

  it("summarizes a contact frame in the status panel", () => {
    const hot = golden.find((f) => f.force.magnitude_n > 0)!;
    const status = statusLines(projectState(hot));
    expect(status.contact).toContain("CONTACT");
    expect(status.selection).toContain("part");
    expect(status.recording).toContain("auto_distance");
  });
});
