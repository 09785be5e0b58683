// HUD state is a pure reduction over incoming frames so it can be tested
// without a canvas or a socket. Rendering reads this and nothing else.

import type { Frame, Paradigm, StateFrame, TrialEndFrame, TrialStatus } from "./protocol.js";

export type Connection = "connecting" | "open" | "closed";

export interface HudState {
  frame: StateFrame | null; // newest state frame only, never an older one
  paradigm: Paradigm | null;
  status: "idle" | TrialStatus;
  blocked: [boolean, boolean]; // per input dimension, from the newest frame
  agreementPct: number | null;
  end: TrialEndFrame | null; // metrics shown verbatim from this payload
  error: string | null;
  modelReady: string | null;
  connection: Connection;
}

export function initialHud(): HudState {
  return {
    frame: null,
    paradigm: null,
    status: "idle",
    blocked: [false, false],
    agreementPct: null,
    end: null,
    error: null,
    modelReady: null,
    connection: "connecting",
  };
}

/** A dimension is blocked when the autonomy zeroed it: the applied input is
 *  exactly 0 while the pilot was commanding something nonzero. */
export function blockedFlags(frame: StateFrame): [boolean, boolean] {
  return [
    frame.u_applied[0] === 0 && frame.u_user[0] !== 0,
    frame.u_applied[1] === 0 && frame.u_user[1] !== 0,
  ];
}

export type HudEvent =
  | { kind: "frame"; frame: Frame }
  | { kind: "started"; paradigm: Paradigm }
  | { kind: "connection"; state: Connection };

export function reduce(hud: HudState, ev: HudEvent): HudState {
  if (ev.kind === "connection") {
    return { ...hud, connection: ev.state };
  }
  if (ev.kind === "started") {
    return {
      ...hud,
      paradigm: ev.paradigm,
      status: "running",
      frame: null,
      end: null,
      error: null,
      blocked: [false, false],
      agreementPct: null,
    };
  }
  const frame = ev.frame;
  switch (frame.type) {
    case "state": {
      // frames can arrive reordered after a reconnect; an older frame must
      // never overwrite a newer pose
      if (hud.frame !== null && frame.t < hud.frame.t) return hud;
      return {
        ...hud,
        frame,
        status: frame.status,
        blocked: blockedFlags(frame),
        agreementPct: frame.agreement_so_far * 100,
      };
    }
    case "trial_end":
      return { ...hud, end: frame, blocked: [false, false] };
    case "error":
      return { ...hud, error: frame.message };
    case "model_ready":
      return { ...hud, modelReady: frame.model_id };
  }
}
