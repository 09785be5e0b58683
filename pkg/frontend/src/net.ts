// Socket wrapper with reconnect. The page stays up when the service
// restarts; frames flow again once the socket reopens.

import { parseFrame, type Frame } from "./protocol.js";
import type { Connection } from "./hud.js";

type WsCtor = new (url: string) => WebSocket;

export interface SocketHandlers {
  onFrame(frame: Frame): void;
  onConnection(state: Connection): void;
}

export class CockpitSocket {
  private ws: WebSocket | null = null;
  private retryMs = 500;
  private closedByUs = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private handlers: SocketHandlers,
    private ctor: WsCtor = WebSocket,
  ) {}

  connect(): void {
    this.closedByUs = false;
    this.handlers.onConnection("connecting");
    const ws = new this.ctor(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.retryMs = 500;
      this.handlers.onConnection("open");
    };
    ws.onmessage = (ev) => {
      const frame = parseFrame(String(ev.data));
      if (frame) this.handlers.onFrame(frame); // malformed frames never render
    };
    ws.onclose = () => {
      this.ws = null;
      this.handlers.onConnection("closed");
      if (!this.closedByUs) this.scheduleRetry();
    };
    ws.onerror = () => {
      // close follows; nothing to do here
    };
  }

  private scheduleRetry(): void {
    if (this.retryTimer !== null) return;
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      this.connect();
    }, this.retryMs);
    this.retryMs = Math.min(this.retryMs * 2, 4000);
  }

  /** Manual reconnect from the overlay button: skip the backoff. */
  reconnectNow(): void {
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    if (this.ws === null) this.connect();
  }

  send(text: string): boolean {
    if (this.ws !== null && this.ws.readyState === 1) {
      this.ws.send(text);
      return true;
    }
    return false;
  }

  close(): void {
    this.closedByUs = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    this.ws?.close();
  }
}
