/**
 * Render math kept separate from three.js wiring so it is testable headless.
 *
 * The browser has no force display, so contact is substituted with visual
 * cues: a force arrow at the stylus proxy scaled by |f|/6.4 with a saturation
 * indicator at the peak, a tint on the colliding entity, and the witness
 * segment drawn when the pair is inside the safety margin.
 */

import type { EntityView, ForceArrowView, UiSessionView } from "./viewState.js";

export const ARROW_MAX_LENGTH_MM = 120;

export const COLOR_IDLE = "#8899aa";
export const COLOR_SELECTED = "#4d90fe";
export const COLOR_CONTACT = "#e04040";
export const COLOR_SATURATED = "#ffaa00";

export function entityColor(e: EntityView): string {
  if (e.inContact) return COLOR_CONTACT;
  if (e.selected) return COLOR_SELECTED;
  return COLOR_IDLE;
}

export function forceArrowLengthMm(arrow: ForceArrowView): number {
  return arrow.visible ? arrow.lengthFraction * ARROW_MAX_LENGTH_MM : 0;
}

export function forceArrowColor(arrow: ForceArrowView): string {
  return arrow.saturated ? COLOR_SATURATED : COLOR_CONTACT;
}

export interface StatusLine {
  selection: string;
  mapping: string;
  recording: string;
  contact: string;
}

export function statusLines(view: UiSessionView): StatusLine {
  const sel = view.selection;
  return {
    selection: sel.name
      ? `${sel.name}${sel.handleMode ? ` [${sel.handleMode}]` : ""}` +
        (sel.clutchEngaged ? " (clutched)" : "")
      : "nothing selected",
    mapping: `${view.mapping.scaleLevel} x${view.mapping.factor.toFixed(2)} / ${view.mapping.frameMode}`,
    recording: view.recording.active
      ? `recording ${view.recording.mode}: ${view.recording.waypoints} waypoints`
      : "not recording",
    contact: view.contact
      ? `CONTACT (d = ${view.witness.distanceMm.toFixed(2)} mm)`
      : view.witness.visible
        ? `clear (d = ${view.witness.distanceMm.toFixed(2)} mm)`
        : "clear",
  };
}
