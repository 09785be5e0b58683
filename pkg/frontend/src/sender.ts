// Fixed-cadence input streamer. The server simulates at 50 Hz and reads the
// newest input by seq, so the sender's one job is a steady stream of frames
// with a strictly increasing counter -- across trials too, seq never resets.

import { inputMsg } from "./protocol.js";
import type { Stick } from "./input.js";

export const SEND_PERIOD_MS = 20;

export class InputSender {
  private seq = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private send: (text: string) => void,
    private sample: (nowMs: number) => Stick,
    private now: () => number = () => performance.now(),
  ) {}

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.tick(), SEND_PERIOD_MS);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  running(): boolean {
    return this.timer !== null;
  }

  tick(): void {
    const s = this.sample(this.now());
    this.send(inputMsg(this.seq++, s.uMain, s.uRot));
  }

  /** One immediate zero frame, e.g. on blur: the craft must not fly on a
   *  stale stick while the pilot is looking at another window. */
  sendZero(): void {
    this.send(inputMsg(this.seq++, 0, 0));
  }

  nextSeq(): number {
    return this.seq;
  }
}
