// Pilot input: keyboard with an analog thrust ramp, or a gamepad with a
// deadzone. Everything time-dependent takes an explicit clock so tests can
// drive it.

export interface Stick {
  uMain: number; // [0, 1]
  uRot: number; // [-1, 1]
}

export const ZERO_STICK: Stick = { uMain: 0, uRot: 0 };

export const RAMP_MS = 150;
export const DEADZONE = 0.05;

/** Main-engine keyboard ramp: while the key is held the command climbs
 *  linearly 0 -> 1 over RAMP_MS; releasing cuts it straight to 0. */
export class ThrustRamp {
  private heldSince: number | null = null;

  update(held: boolean, nowMs: number): void {
    if (held && this.heldSince === null) this.heldSince = nowMs;
    if (!held) this.heldSince = null;
  }

  value(nowMs: number): number {
    if (this.heldSince === null) return 0;
    return Math.min(1, (nowMs - this.heldSince) / RAMP_MS);
  }

  reset(): void {
    this.heldSince = null;
  }
}

const MAIN_KEYS = ["KeyW", "ArrowUp"];
const LEFT_KEYS = ["KeyA", "ArrowLeft"];
const RIGHT_KEYS = ["KeyD", "ArrowRight"];
const ALL_KEYS = [...MAIN_KEYS, ...LEFT_KEYS, ...RIGHT_KEYS];

export class KeyboardInput {
  private down = new Set<string>();
  private ramp = new ThrustRamp();

  handles(code: string): boolean {
    return ALL_KEYS.includes(code);
  }

  keyDown(code: string): void {
    if (this.handles(code)) this.down.add(code);
  }

  keyUp(code: string): void {
    this.down.delete(code);
  }

  /** Blur means the pilot lost the page: every key is released. */
  blur(): void {
    this.down.clear();
    this.ramp.reset();
  }

  sample(nowMs: number): Stick {
    const some = (codes: string[]) => codes.some((c) => this.down.has(c));
    this.ramp.update(some(MAIN_KEYS), nowMs);
    const left = some(LEFT_KEYS) ? -1 : 0;
    const right = some(RIGHT_KEYS) ? 1 : 0;
    return { uMain: this.ramp.value(nowMs), uRot: left + right };
  }
}

function deadzone(v: number): number {
  return Math.abs(v) < DEADZONE ? 0 : v;
}

const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));

/** Map gamepad axes to the stick. Up on the left stick (negative axis 1)
 *  throttles the main engine; the right stick's horizontal axis steers
 *  rotation. Axes inside the deadzone read as centered. */
export function gamepadStick(axes: ArrayLike<number>): Stick {
  const main = -(axes[1] ?? 0);
  const rot = axes.length > 2 ? axes[2] ?? 0 : 0;
  return {
    uMain: clamp(deadzone(main), 0, 1),
    uRot: clamp(deadzone(rot), -1, 1),
  };
}

export interface PadReader {
  (): ArrayLike<number> | null; // connected gamepad axes, or null
}

/** One stick value per tick: gamepad when one is connected, keyboard
 *  otherwise, zeros whenever the page is unfocused. */
export class InputSource {
  readonly keyboard = new KeyboardInput();
  private focused = true;

  constructor(private readPad: PadReader = () => null) {}

  setFocus(focused: boolean): void {
    this.focused = focused;
    if (!focused) this.keyboard.blur();
  }

  sample(nowMs: number): Stick {
    if (!this.focused) return ZERO_STICK;
    const axes = this.readPad();
    if (axes !== null) return gamepadStick(axes);
    return this.keyboard.sample(nowMs);
  }
}
