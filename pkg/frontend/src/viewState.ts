/**
 * Pure projection from bridge state messages to what the page draws.
 *
 * The view never mutates the scene client-side; it is a function of the last
 * `StateMessage` only, so reloading the page and replaying the latest message
 * reconstructs the identical view.
 */

import type { EntityState, PoseDict, StateMessage } from "./messages.js";

export const FORCE_PEAK_N = 6.4;

export interface EntityView {
  name: string;
  kind: EntityState["kind"];
  pose: PoseDict;
  q: number[];
  selected: boolean;
  inContact: boolean;
}

export interface ForceArrowView {
  visible: boolean;
  direction: [number, number, number]; // unit, device frame
  lengthFraction: number; // |f| / 6.4, in [0, 1]
  saturated: boolean;
}

export interface WitnessSegmentView {
  visible: boolean;
  a: [number, number, number];
  b: [number, number, number];
  distanceMm: number;
}

export interface UiSessionView {
  seq: number;
  entities: EntityView[];
  stylusPose: PoseDict | null;
  stylusButton: boolean;
  forceArrow: ForceArrowView;
  witness: WitnessSegmentView;
  selection: { name: string | null; handleMode: string | null; clutchEngaged: boolean };
  mapping: { scaleLevel: string; frameMode: string; worldSpanMm: number; factor: number };
  recording: { active: boolean; mode: string | null; waypoints: number };
  contact: boolean;
}

function entityPose(e: EntityState): PoseDict {
  if (e.kind === "solid") return e.pose;
  if (e.kind === "robot") return e.base_pose;
  return e.root_pose;
}

export function projectState(msg: StateMessage): UiSessionView {
  const magnitude = msg.force.magnitude_n;
  const contact = magnitude > 0 || (msg.witness !== null && msg.witness.distance === 0);
  const direction: [number, number, number] =
    magnitude > 0
      ? [
          msg.force.force_n[0] / magnitude,
          msg.force.force_n[1] / magnitude,
          msg.force.force_n[2] / magnitude,
        ]
      : [0, 0, 0];
  const entities = Object.keys(msg.scene_state)
    .sort()
    .map((name) => {
      const e = msg.scene_state[name];
      return {
        name,
        kind: e.kind,
        pose: entityPose(e),
        q: e.kind === "solid" ? [] : e.q,
        selected: msg.selection.name === name,
        inContact: contact && msg.selection.name === name,
      };
    });
  return {
    seq: msg.seq,
    entities,
    stylusPose: msg.stylus ? msg.stylus.pose : null,
    stylusButton: msg.stylus ? msg.stylus.button_down : false,
    forceArrow: {
      visible: magnitude > 0,
      direction,
      lengthFraction: Math.min(1, magnitude / FORCE_PEAK_N),
      saturated: magnitude >= FORCE_PEAK_N - 1e-9,
    },
    witness: {
      visible: msg.witness !== null,
      a: msg.witness ? msg.witness.point_a : [0, 0, 0],
      b: msg.witness ? msg.witness.point_b : [0, 0, 0],
      distanceMm: msg.witness ? msg.witness.distance : Infinity,
    },
    selection: {
      name: msg.selection.name,
      handleMode: msg.selection.handle_mode,
      clutchEngaged: msg.selection.clutch_engaged,
    },
    mapping: {
      scaleLevel: msg.mapping.scale_level,
      frameMode: msg.mapping.frame_mode,
      worldSpanMm: msg.mapping.world_span_mm,
      factor: msg.mapping.factor,
    },
    recording: {
      active: msg.recording.active,
      mode: msg.recording.mode,
      waypoints: msg.recording.waypoints,
    },
    contact,
  };
}
