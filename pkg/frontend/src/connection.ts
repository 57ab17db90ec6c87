/** WebSocket client: handshake, ordered event delivery, command acks.
 *
 * Events are delivered to the store strictly in seq order; frames that
 * arrive ahead of a gap are buffered until the gap fills. Reconnecting
 * with the last seen seq replays exactly the missed suffix, so a client
 * that dropped and resumed is indistinguishable from one that never did.
 */
import { AckPayload, Frame, GameEvent, PROTOCOL_VERSION } from "./protocol.js";

type SocketLike = {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: any) => void) | null;
  onmessage: ((ev: { data: any }) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
};

export type SocketCtor = new (url: string) => SocketLike;

export interface ConnectionHandlers {
  onWelcome?: (payload: any) => void;
  onEvent?: (event: GameEvent) => void;
  onView?: (view: any) => void;
  onLobby?: (payload: any) => void;
  onDebrief?: (report: any) => void;
  onError?: (payload: any) => void;
  onStatus?: (status: "connecting" | "open" | "closed") => void;
}

export class GameConnection {
  private socket: SocketLike | null = null;
  private nextCommandSeq = 1;
  private pending = new Map<number, (ack: AckPayload) => void>();
  private buffered = new Map<number, GameEvent>();
  lastSeenSeq: number;

  constructor(
    private readonly url: string,
    private readonly token: string,
    private readonly handlers: ConnectionHandlers,
    private readonly socketCtor: SocketCtor = (globalThis as any).WebSocket,
    lastSeenSeq = -1,
  ) {
    this.lastSeenSeq = lastSeenSeq;
  }

  connect(): Promise<void> {
    this.handlers.onStatus?.("connecting");
    return new Promise((resolve, reject) => {
      const socket = new this.socketCtor(this.url);
      this.socket = socket;
      socket.onopen = () => {
        socket.send(JSON.stringify({
          seq: 0,
          kind: "hello",
          payload: {
            token: this.token,
            protocol_version: PROTOCOL_VERSION,
            last_seen_seq: this.lastSeenSeq,
          },
        }));
      };
      socket.onmessage = (message) => {
        const frame: Frame = JSON.parse(String(message.data));
        if (frame.kind === "welcome") {
          this.handlers.onStatus?.("open");
          this.handlers.onWelcome?.(frame.payload);
          resolve();
          return;
        }
        this.dispatch(frame);
      };
      socket.onerror = (err) => reject(err);
      socket.onclose = () => {
        this.handlers.onStatus?.("closed");
        for (const resolvePending of this.pending.values()) {
          resolvePending({ ok: false, op: "?", error: { code: "Disconnected", message: "connection lost" } });
        }
        this.pending.clear();
      };
    });
  }

  private dispatch(frame: Frame): void {
    switch (frame.kind) {
      case "event":
        this.enqueueEvent(frame.payload as GameEvent);
        break;
      case "view":
        this.handlers.onView?.(frame.payload);
        break;
      case "lobby":
        this.handlers.onLobby?.(frame.payload);
        break;
      case "debrief":
        this.handlers.onDebrief?.(frame.payload);
        break;
      case "ack":
      case "nack": {
        const resolve = frame.seq === null ? undefined : this.pending.get(frame.seq);
        if (resolve && frame.seq !== null) {
          this.pending.delete(frame.seq);
          resolve(frame.payload as AckPayload);
        }
        break;
      }
      case "error":
        this.handlers.onError?.(frame.payload);
        break;
    }
  }

  private enqueueEvent(event: GameEvent): void {
    if (event.seq <= this.lastSeenSeq) return; // at-least-once delivery: drop repeats
    this.buffered.set(event.seq, event);
    while (this.buffered.has(this.lastSeenSeq + 1)) {
      const next = this.buffered.get(this.lastSeenSeq + 1)!;
      this.buffered.delete(next.seq);
      this.lastSeenSeq = next.seq;
      this.handlers.onEvent?.(next);
    }
  }

  command(op: string, args: Record<string, any> = {}): Promise<AckPayload> {
    const socket = this.socket;
    if (!socket) return Promise.reject(new Error("not connected"));
    const seq = this.nextCommandSeq++;
    return new Promise((resolve) => {
      this.pending.set(seq, resolve);
      socket.send(JSON.stringify({ seq, kind: "command", payload: { op, args } }));
    });
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
  }
}
