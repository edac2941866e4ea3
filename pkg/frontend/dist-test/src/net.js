// Bridge link: one WebSocket, auto-reconnect, and a command queue so dial
// turns made while disconnected are flushed (with a visible warning) once
// the link is back.
import { commandFrame, parseServerFrame } from "./protocol.js";
export class ConsoleLink {
    url;
    makeSocket;
    reconnectDelayMs;
    socket = null;
    queue = [];
    closed = false;
    onFrame = null;
    onStatus = null;
    constructor(url, makeSocket = (u) => new WebSocket(u), reconnectDelayMs = 1000) {
        this.url = url;
        this.makeSocket = makeSocket;
        this.reconnectDelayMs = reconnectDelayMs;
    }
    connect() {
        this.closed = false;
        const ws = this.makeSocket(this.url);
        this.socket = ws;
        ws.onopen = () => {
            const pending = this.queue.splice(0);
            for (const frame of pending)
                ws.send(frame);
            this.status(true);
        };
        ws.onmessage = (ev) => {
            if (this.onFrame)
                this.onFrame(parseServerFrame(String(ev.data)));
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
    send(cmd) {
        const frame = commandFrame(cmd);
        if (this.socket !== null && this.socket.readyState === 1) {
            this.socket.send(frame);
        }
        else {
            this.queue.push(frame); // flushed on reconnect
            this.status(false);
        }
    }
    get queuedCount() {
        return this.queue.length;
    }
    close() {
        this.closed = true;
        if (this.socket)
            this.socket.close();
    }
    status(connected) {
        if (this.onStatus)
            this.onStatus(connected, this.queue.length);
    }
}
