import { afterEach, beforeEach, describe, expect, test, vi } from "vitest";
import { InputSender, SEND_PERIOD_MS } from "../src/sender.js";
import type { Stick } from "../src/input.js";

function collector() {
  const sent: { seq: number; u_main: number; u_rot: number }[] = [];
  return { sent, send: (text: string) => sent.push(JSON.parse(text)) };
}

describe("input sender", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  test("streams at 50 Hz with consecutive seq", () => {
    const { sent, send } = collector();
    const sender = new InputSender(send, () => ({ uMain: 0.3, uRot: -1 }), () => 0);
    sender.start();
    vi.advanceTimersByTime(10 * SEND_PERIOD_MS);
    expect(sent).toHaveLength(10);
    sent.forEach((m, i) => {
      expect(m.seq).toBe(i);
      expect(m.u_main).toBe(0.3);
      expect(m.u_rot).toBe(-1);
    });
    sender.stop();
  });

  test("seq keeps growing across stop/start", () => {
    const { sent, send } = collector();
    const sender = new InputSender(send, () => ({ uMain: 0, uRot: 0 }), () => 0);
    sender.start();
    vi.advanceTimersByTime(3 * SEND_PERIOD_MS);
    sender.stop();
    vi.advanceTimersByTime(500); // nothing sent while stopped
    sender.start();
    vi.advanceTimersByTime(2 * SEND_PERIOD_MS);
    const seqs = sent.map((m) => m.seq);
    expect(seqs).toEqual([0, 1, 2, 3, 4]);
  });

  test("double start does not double the stream", () => {
    const { sent, send } = collector();
    const sender = new InputSender(send, () => ({ uMain: 0, uRot: 0 }), () => 0);
    sender.start();
    sender.start();
    vi.advanceTimersByTime(5 * SEND_PERIOD_MS);
    expect(sent).toHaveLength(5);
    sender.stop();
  });

  test("sample values follow the clock handed to the sampler", () => {
    const { sent, send } = collector();
    let now = 0;
    const sample = (nowMs: number): Stick => ({ uMain: nowMs / 1000, uRot: 0 });
    const sender = new InputSender(send, sample, () => now);
    sender.start();
    now = 40;
    vi.advanceTimersByTime(SEND_PERIOD_MS);
    expect(sent[0].u_main).toBeCloseTo(0.04, 12);
    sender.stop();
  });

  test("sendZero pushes an immediate zero frame with the next seq", () => {
    const { sent, send } = collector();
    const sender = new InputSender(send, () => ({ uMain: 0.9, uRot: 0.2 }), () => 0);
    sender.start();
    vi.advanceTimersByTime(2 * SEND_PERIOD_MS);
    sender.sendZero();
    expect(sent.at(-1)).toEqual({ type: "input", seq: 2, u_main: 0, u_rot: 0 });
    vi.advanceTimersByTime(SEND_PERIOD_MS);
    expect(sent.at(-1)!.seq).toBe(3); // stream continues after it
    sender.stop();
  });
});
