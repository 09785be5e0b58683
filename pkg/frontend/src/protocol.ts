// Wire protocol of the cockpit service. Field names here are the contract;
// the server is the authority and this file just mirrors it.

export type Paradigm =
  | "user_only"
  | "shared_individual"
  | "shared_general"
  | "shared_expert";

export const PARADIGMS: Paradigm[] = [
  "user_only",
  "shared_individual",
  "shared_general",
  "shared_expert",
];

export type TrialStatus = "running" | "success" | "crash" | "out_of_bounds" | "timeout";

export interface StateFrame {
  type: "state";
  t: number;
  state: number[]; // [x, y, theta, vx, vy, omega]
  u_user: [number, number];
  u_opt?: [number, number]; // absent in user_only trials
  u_applied: [number, number];
  agreement_so_far: number;
  status: TrialStatus;
}

export interface TrialEndFrame {
  type: "trial_end";
  outcome: { status: string; steps: number };
  metrics: { time: number; path_length: number; total_cost: number };
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export interface ModelReadyFrame {
  type: "model_ready";
  model_id: string;
}

export type Frame = StateFrame | TrialEndFrame | ErrorFrame | ModelReadyFrame;

function finitePair(v: unknown): v is [number, number] {
  return (
    Array.isArray(v) &&
    v.length === 2 &&
    v.every((x) => typeof x === "number" && Number.isFinite(x))
  );
}

const STATUSES = new Set(["running", "success", "crash", "out_of_bounds", "timeout"]);

/** Parse one websocket message; null for anything malformed or unknown.
 *  A partial frame must never reach the renderer, so every field the UI
 *  touches is checked here, not downstream. */
export function parseFrame(text: string): Frame | null {
  let msg: any;
  try {
    msg = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  switch (msg.type) {
    case "state": {
      const stateOk =
        Array.isArray(msg.state) &&
        msg.state.length === 6 &&
        msg.state.every((x: unknown) => typeof x === "number" && Number.isFinite(x));
      if (
        typeof msg.t !== "number" ||
        !stateOk ||
        !finitePair(msg.u_user) ||
        !finitePair(msg.u_applied) ||
        (msg.u_opt !== undefined && !finitePair(msg.u_opt)) ||
        typeof msg.agreement_so_far !== "number" ||
        !STATUSES.has(msg.status)
      ) {
        return null;
      }
      return msg as StateFrame;
    }
    case "trial_end": {
      const o = msg.outcome, m = msg.metrics;
      if (
        typeof o !== "object" || o === null ||
        typeof o.status !== "string" || typeof o.steps !== "number" ||
        typeof m !== "object" || m === null ||
        typeof m.time !== "number" ||
        typeof m.path_length !== "number" ||
        typeof m.total_cost !== "number"
      ) {
        return null;
      }
      return msg as TrialEndFrame;
    }
    case "error":
      return typeof msg.message === "string" ? (msg as ErrorFrame) : null;
    case "model_ready":
      return typeof msg.model_id === "string" ? (msg as ModelReadyFrame) : null;
    default:
      return null;
  }
}

// Outbound messages. The server applies inputs latest-wins by seq and may
// drop anything with a stale seq, so seq must only ever grow.

export function helloMsg(name: string) {
  return JSON.stringify({ type: "hello", name });
}

export function startMsg(
  paradigm: Paradigm,
  opts: { modelId?: string; seed?: number; lockstep?: boolean } = {},
) {
  const msg: any = { type: "start", paradigm };
  if (opts.modelId !== undefined) msg.model_id = opts.modelId;
  if (opts.seed !== undefined) msg.seed = opts.seed;
  if (opts.lockstep) msg.lockstep = true;
  return JSON.stringify(msg);
}

export function inputMsg(seq: number, uMain: number, uRot: number) {
  return JSON.stringify({ type: "input", seq, u_main: uMain, u_rot: uRot });
}

export function abortMsg() {
  return JSON.stringify({ type: "abort" });
}

export function trainMsg(sessionIds: string[]) {
  return JSON.stringify({ type: "train", session_ids: sessionIds });
}
