// Bridge link: one WebSocket, auto-reconnect, and a command queue so dial
// turns made while disconnected are flushed (with a visible warning) once
// the link is back.

import { Command, commandFrame, parseServerFrame, ServerFrame } from "./protocol.js";

type SocketFactory = (url: string) => WebSocket;

export class ConsoleLink {
  private socket: WebSocket | null = null;
  private queue: string[] = [];
  private closed = false;

  onFrame: ((frame: ServerFrame) => void) | null = null;
  onStatus: ((connected: boolean, queued: number) => void) | null = null;

  constructor(
    private url: string,
    private makeSocket: SocketFactory = (u) => new WebSocket(u),
    private reconnectDelayMs = 1000,
  ) {}

  connect(): void {
    this.closed = false;
    const ws = this.makeSocket(this.url);
    this.socket = ws;
    ws.onopen = () => {
      const pending = this.queue.splice(0);
      for (const frame of pending) ws.send(frame);
      this.status(true);
    };
    ws.onmessage = (ev: MessageEvent) => {
      if (this.onFrame) this.onFrame(parseServerFrame(String(ev.data)));
    };
    ws.onclose = () => {
      this.socket = null;
      this.status(false);
      if (!this.closed) {
        setTimeout(() => this.connect(), this.reconnectDelayMs);
      }
    };
    ws.onerror = () => {
      /* close follows; reconnect handles it */
    };
  }

  send(cmd: Command): void {
    const frame = commandFrame(cmd);
    if (this.socket !== null && this.socket.readyState === 1) {
      this.socket.send(frame);
    } else {
      this.queue.push(frame); // flushed on reconnect
      this.status(false);
    }
  }

  get queuedCount(): number {
    return this.queue.length;
  }

  close(): void {
    this.closed = true;
    if (this.socket) this.socket.close();
  }

  private status(connected: boolean): void {
    if (this.onStatus) this.onStatus(connected, this.queue.length);
  }
}
