/**
 * Bridge client: a thin WebSocket wrapper with an injectable socket factory
 * so the same code runs in the browser and under node-based tests.
 */

import { parseStateMessage, type Command, type StateMessage } from "./messages.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "message", cb: (ev: { data: unknown }) => void): void;
  addEventListener(type: "open" | "close" | "error", cb: () => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export class BridgeClient {
  onState: (msg: StateMessage) => void = () => {};
  onOpen: () => void = () => {};
  onClose: () => void = () => {};

  private socket: SocketLike;
  private opened = false;

  constructor(url: string, factory?: SocketFactory) {
    const make: SocketFactory =
      factory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.socket = make(url);
    this.socket.addEventListener("open", () => {
      this.opened = true;
      this.onOpen();
    });
    this.socket.addEventListener("close", () => {
      this.opened = false;
      this.onClose();
    });
    this.socket.addEventListener("error", () => {
      // connection failures surface through onClose; an unhandled error
      // event would crash a node host
    });
    this.socket.addEventListener("message", (ev) => {
      let decoded: unknown;
      try {
        decoded = JSON.parse(String(ev.data));
      } catch {
        return; // non-JSON frames are ignored
      }
      const msg = parseStateMessage(decoded);
      if (msg !== null) this.onState(msg);
    });
  }

  get isOpen(): boolean {
    return this.opened;
  }

  send(command: Command): void {
    this.socket.send(JSON.stringify(command));
  }

  close(): void {
    this.socket.close();
  }
}
