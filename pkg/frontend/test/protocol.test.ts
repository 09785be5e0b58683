import { describe, expect, test } from "vitest";
import {
  abortMsg,
  helloMsg,
  inputMsg,
  parseFrame,
  startMsg,
  trainMsg,
} from "../src/protocol.js";

const stateText = (over: object = {}) =>
  JSON.stringify({
    type: "state",
    t: 0.04,
    state: [10, 9.9, 0, 0, -0.1, 0],
    u_user: [0.4, 0],
    u_applied: [0.4, 0],
    agreement_so_far: 1,
    status: "running",
    ...over,
  });

describe("frame parsing", () => {
  test("accepts a full state frame, with and without u_opt", () => {
    const plain = parseFrame(stateText());
    expect(plain).not.toBeNull();
    expect(plain!.type).toBe("state");
    const shared = parseFrame(stateText({ u_opt: [1, -0.2] }));
    expect(shared!.type).toBe("state");
  });

  test("rejects partial state frames outright", () => {
    expect(parseFrame(stateText({ state: [1, 2, 3] }))).toBeNull();
    expect(parseFrame(stateText({ u_applied: [0.4] }))).toBeNull();
    expect(parseFrame(stateText({ t: "soon" }))).toBeNull();
    expect(parseFrame(stateText({ status: "exploded" }))).toBeNull();
    expect(parseFrame(stateText({ u_opt: ["a", "b"] }))).toBeNull();
    expect(parseFrame(stateText({ state: [1, 2, 3, 4, 5, null] }))).toBeNull();
  });

  test("accepts the other frame kinds", () => {
    expect(
      parseFrame(
        JSON.stringify({
          type: "trial_end",
          outcome: { status: "success", steps: 200 },
          metrics: { time: 4, path_length: 5, total_cost: 900 },
        }),
      )!.type,
    ).toBe("trial_end");
    expect(parseFrame('{"type":"error","message":"m"}')!.type).toBe("error");
    expect(parseFrame('{"type":"model_ready","model_id":"x_001"}')!.type).toBe("model_ready");
  });

  test("rejects malformed trial_end payloads", () => {
    expect(parseFrame('{"type":"trial_end","outcome":{"status":"success"}}')).toBeNull();
    expect(
      parseFrame(
        JSON.stringify({
          type: "trial_end",
          outcome: { status: "success", steps: 200 },
          metrics: { time: 4, path_length: 5 },
        }),
      ),
    ).toBeNull();
  });

  test("garbage never throws, it returns null", () => {
    expect(parseFrame("not json")).toBeNull();
    expect(parseFrame("42")).toBeNull();
    expect(parseFrame("null")).toBeNull();
    expect(parseFrame('{"type":"telemetry"}')).toBeNull();
    expect(parseFrame('{"no_type":1}')).toBeNull();
  });
});

describe("outbound builders", () => {
  test("start carries options only when set", () => {
    expect(JSON.parse(startMsg("user_only"))).toEqual({ type: "start", paradigm: "user_only" });
    expect(JSON.parse(startMsg("shared_individual", { modelId: "m_001", seed: 7, lockstep: true })))
      .toEqual({
        type: "start",
        paradigm: "shared_individual",
        model_id: "m_001",
        seed: 7,
        lockstep: true,
      });
    // lockstep false is the default and stays off the wire
    expect(JSON.parse(startMsg("user_only", { lockstep: false }))).toEqual({
      type: "start",
      paradigm: "user_only",
    });
  });

  test("the rest are one-liners with exact field names", () => {
    expect(JSON.parse(helloMsg("ada"))).toEqual({ type: "hello", name: "ada" });
    expect(JSON.parse(inputMsg(12, 0.5, -1))).toEqual({
      type: "input",
      seq: 12,
      u_main: 0.5,
      u_rot: -1,
    });
    expect(JSON.parse(abortMsg())).toEqual({ type: "abort" });
    expect(JSON.parse(trainMsg(["sess_0001"]))).toEqual({
      type: "train",
      session_ids: ["sess_0001"],
    });
  });
});
