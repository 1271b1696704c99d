/**
 * Wire schema of the session bridge, bit-exact.
 *
 * Server -> client: one `StateMessage` per session step (~30 Hz), plus one
 * greeting snapshot on connect.
 *
 * Client -> server commands:
 *   {type:"teleop_pose", position_mm:[x,y,z], quat_wxyz:[w,x,y,z], button}
 *   {type:"clutch", engaged}
 *   {type:"select", name}
 *   {type:"handle_mode", mode}      {type:"pivot", mode}
 *   {type:"scale", level}           {type:"frame", mode}
 *   {type:"zoom", factor}
 *   {type:"record", action:"start"|"stop", mode?, interval_ms?, interval_mm?}
 *
 * All positions are millimetres, quaternions are wxyz, forces newtons.
 */

export interface PoseDict {
  position_mm: [number, number, number];
  quat_wxyz: [number, number, number, number];
}

export interface SolidState {
  kind: "solid";
  pose: PoseDict;
}

export interface RobotState {
  kind: "robot";
  base_pose: PoseDict;
  q: number[];
}

export interface MannequinState {
  kind: "mannequin";
  root_pose: PoseDict;
  q: number[];
}

export type EntityState = SolidState | RobotState | MannequinState;

export interface StylusState {
  pose: PoseDict;
  button_down: boolean;
  seq: number;
  timestamp_ms: number;
}

export interface ForceState {
  force_n: [number, number, number];
  clamped: boolean;
  magnitude_n: number;
}

export interface WitnessState {
  point_a: [number, number, number];
  point_b: [number, number, number];
  distance: number;
}

export interface RecordingState {
  active: boolean;
  mode: string | null;
  waypoints: number;
}

export interface SelectionState {
  name: string | null;
  handle_mode: string | null;
  clutch_engaged: boolean;
}

export interface MappingState {
  scale_level: string;
  frame_mode: string;
  world_span_mm: number;
  factor: number;
}

export interface StateMessage {
  type: "state";
  seq: number;
  scene_state: Record<string, EntityState>;
  stylus: StylusState | null;
  force: ForceState;
  witness: WitnessState | null;
  recording: RecordingState;
  selection: SelectionState;
  mapping: MappingState;
}

export type Command =
  | { type: "teleop_pose"; position_mm: number[]; quat_wxyz?: number[]; button?: boolean }
  | { type: "clutch"; engaged: boolean }
  | { type: "select"; name: string | null }
  | { type: "handle_mode"; mode: string }
  | { type: "pivot"; mode: string }
  | { type: "scale"; level: string }
  | { type: "frame"; mode: string }
  | { type: "zoom"; factor: number }
  | {
      type: "record";
      action: "start" | "stop";
      mode?: string;
      interval_ms?: number;
      interval_mm?: number;
    };

function isVec3(v: unknown): v is [number, number, number] {
  return Array.isArray(v) && v.length === 3 && v.every((x) => typeof x === "number");
}

function isPose(p: unknown): p is PoseDict {
  if (typeof p !== "object" || p === null) return false;
  const d = p as Record<string, unknown>;
  return (
    isVec3(d.position_mm) &&
    Array.isArray(d.quat_wxyz) &&
    d.quat_wxyz.length === 4 &&
    d.quat_wxyz.every((x) => typeof x === "number")
  );
}

function isEntityState(e: unknown): e is EntityState {
  if (typeof e !== "object" || e === null) return false;
  const d = e as Record<string, unknown>;
  if (d.kind === "solid") return isPose(d.pose);
  if (d.kind === "robot") return isPose(d.base_pose) && Array.isArray(d.q);
  if (d.kind === "mannequin") return isPose(d.root_pose) && Array.isArray(d.q);
  return false;
}

/** Narrow a decoded JSON value to a `StateMessage`; null if it is anything else. */
export function parseStateMessage(raw: unknown): StateMessage | null {
  if (typeof raw !== "object" || raw === null) return null;
  const d = raw as Record<string, unknown>;
  if (d.type !== "state" || typeof d.seq !== "number") return null;
  if (typeof d.scene_state !== "object" || d.scene_state === null) return null;
  for (const entity of Object.values(d.scene_state as Record<string, unknown>)) {
    if (!isEntityState(entity)) return null;
  }
  if (d.stylus !== null && !isPose((d.stylus as Record<string, unknown>)?.pose)) return null;
  const force = d.force as Record<string, unknown> | undefined;
  if (!force || !isVec3(force.force_n) || typeof force.magnitude_n !== "number") return null;
  if (d.witness !== null) {
    const w = d.witness as Record<string, unknown>;
    if (!isVec3(w.point_a) || !isVec3(w.point_b) || typeof w.distance !== "number") return null;
  }
  return raw as StateMessage;
}
