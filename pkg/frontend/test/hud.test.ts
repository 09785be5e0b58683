import { describe, expect, test } from "vitest";
import { blockedFlags, initialHud, reduce } from "../src/hud.js";
import type { StateFrame, TrialEndFrame } from "../src/protocol.js";

function frame(over: Partial<StateFrame> = {}): StateFrame {
  return {
    type: "state",
    t: 0.02,
    state: [10, 9.8, 0.01, 0, -0.3, 0],
    u_user: [0.5, -0.2],
    u_applied: [0.5, -0.2],
    agreement_so_far: 1,
    status: "running",
    ...over,
  };
}

describe("blocked flags", () => {
  test("set exactly when the autonomy zeroed a nonzero command", () => {
    expect(blockedFlags(frame({ u_user: [0.5, -0.2], u_applied: [0, -0.2] }))).toEqual([true, false]);
    expect(blockedFlags(frame({ u_user: [0.5, -0.2], u_applied: [0.5, 0] }))).toEqual([false, true]);
    expect(blockedFlags(frame({ u_user: [0.4, 0.3], u_applied: [0, 0] }))).toEqual([true, true]);
  });

  test("a zero command passing through as zero is not a block", () => {
    expect(blockedFlags(frame({ u_user: [0, 0], u_applied: [0, 0] }))).toEqual([false, false]);
  });

  test("a passed-through command is never flagged", () => {
    expect(blockedFlags(frame())).toEqual([false, false]);
  });
});

describe("hud reduction", () => {
  test("starting a trial clears the previous one", () => {
    let hud = reduce(initialHud(), { kind: "frame", frame: frame() });
    hud = reduce(hud, {
      kind: "frame",
      frame: {
        type: "trial_end",
        outcome: { status: "crash", steps: 1 },
        metrics: { time: 0.02, path_length: 0, total_cost: 1 },
      },
    });
    hud = reduce(hud, { kind: "started", paradigm: "shared_expert" });
    expect(hud.paradigm).toBe("shared_expert");
    expect(hud.status).toBe("running");
    expect(hud.frame).toBeNull();
    expect(hud.end).toBeNull();
    expect(hud.blocked).toEqual([false, false]);
  });

  test("state frames update pose, status and agreement", () => {
    const hud = reduce(initialHud(), {
      kind: "frame",
      frame: frame({ agreement_so_far: 0.75, status: "running" }),
    });
    expect(hud.frame!.state[1]).toBe(9.8);
    expect(hud.agreementPct).toBe(75);
    expect(hud.status).toBe("running");
  });

  test("an older frame never overwrites a newer one", () => {
    let hud = reduce(initialHud(), { kind: "frame", frame: frame({ t: 1.0, state: [1, 2, 0, 0, 0, 0] }) });
    const before = hud;
    hud = reduce(hud, { kind: "frame", frame: frame({ t: 0.5, state: [9, 9, 0, 0, 0, 0] }) });
    expect(hud).toBe(before); // dropped, not merged
    expect(hud.frame!.state[0]).toBe(1);
  });

  test("a frame with equal time re-renders (same tick redelivered)", () => {
    let hud = reduce(initialHud(), { kind: "frame", frame: frame({ t: 1.0 }) });
    hud = reduce(hud, { kind: "frame", frame: frame({ t: 1.0, u_user: [0.9, 0] }) });
    expect(hud.frame!.u_user[0]).toBe(0.9);
  });

  test("trial end keeps the payload verbatim and drops block flashes", () => {
    const end: TrialEndFrame = {
      type: "trial_end",
      outcome: { status: "success", steps: 321 },
      metrics: { time: 6.42, path_length: 5.9, total_cost: 803.2 },
    };
    let hud = reduce(initialHud(), {
      kind: "frame",
      frame: frame({ u_user: [0.5, 0.5], u_applied: [0.5, 0] }),
    });
    expect(hud.blocked).toEqual([false, true]);
    hud = reduce(hud, { kind: "frame", frame: end });
    expect(hud.end).toBe(end); // the exact object, no reformatting
    expect(hud.blocked).toEqual([false, false]);
  });

  test("errors and trained models surface without touching the pose", () => {
    let hud = reduce(initialHud(), { kind: "frame", frame: frame() });
    hud = reduce(hud, { kind: "frame", frame: { type: "error", message: "nope" } });
    hud = reduce(hud, { kind: "frame", frame: { type: "model_ready", model_id: "p_001" } });
    expect(hud.error).toBe("nope");
    expect(hud.modelReady).toBe("p_001");
    expect(hud.frame).not.toBeNull();
  });

  test("connection events only move the connection field", () => {
    let hud = reduce(initialHud(), { kind: "frame", frame: frame() });
    const posed = hud.frame;
    hud = reduce(hud, { kind: "connection", state: "closed" });
    expect(hud.connection).toBe("closed");
    expect(hud.frame).toBe(posed);
  });

  test("reduction never mutates the previous state", () => {
    const hud0 = initialHud();
    const snapshot = JSON.stringify(hud0);
    reduce(hud0, { kind: "frame", frame: frame() });
    reduce(hud0, { kind: "started", paradigm: "user_only" });
    expect(JSON.stringify(hud0)).toBe(snapshot);
  });
});
