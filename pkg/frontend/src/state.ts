/** Client-side state: a fold over server-pushed frames, nothing invented. */
import { GameEvent, Scenario, View } from "./protocol.js";

export interface ChatMessage {
  seq: number;
  turn: number;
  from: string;
  to: string[];
  text: string;
}

export interface ClientState {
  status: "connecting" | "open" | "closed";
  role: string;
  organization: string | null;
  sessionStatus: string;
  openRoles: string[];
  scenario: Scenario | null;
  view: View | null;
  events: GameEvent[];
  messages: ChatMessage[];
  lastAck: { op: string; ok: boolean; code?: string; message?: string } | null;
  debrief: Record<string, any> | null;
}

export type Listener = (state: ClientState) => void;

export class Store {
  state: ClientState;
  private listeners: Listener[] = [];

  constructor(role: string) {
    this.state = {
      status: "connecting",
      role,
      organization: null,
      sessionStatus: "lobby",
      openRoles: [],
      scenario: null,
      view: null,
      events: [],
      messages: [],
      lastAck: null,
      debrief: null,
    };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  setStatus(status: ClientState["status"]): void {
    this.state.status = status;
    this.notify();
  }

  applyWelcome(payload: any): void {
    this.state.scenario = payload.scenario as Scenario;
    this.state.sessionStatus = payload.session?.status ?? "lobby";
    this.state.openRoles = payload.session?.open_roles ?? [];
    if (this.state.role !== "facilitator" && this.state.scenario?.role_directory) {
      this.state.organization =
        this.state.scenario.role_directory[this.state.role]?.organization ?? null;
    }
    this.notify();
  }

  applyLobby(payload: any): void {
    this.state.sessionStatus = payload.status;
    this.state.openRoles = payload.open_roles ?? [];
    this.notify();
  }

  applyEvent(event: GameEvent): void {
    this.state.events.push(event);
    if (event.kind === "message") {
      this.state.messages.push({
        seq: event.seq,
        turn: event.turn,
        from: event.payload.from,
        to: event.payload.to,
        text: event.payload.text,
      });
    }
    if (event.kind === "game_created" || this.state.sessionStatus === "lobby") {
      this.state.sessionStatus = "running";
    }
    if (event.kind === "game_finished") {
      this.state.sessionStatus = "finished";
      // scores only; the full report may already be (or soon will be) pushed
      if (!this.state.debrief) this.state.debrief = { scores: event.payload.scores };
    }
    this.notify();
  }

  applyView(view: View): void {
    this.state.view = view;
    this.notify();
  }

  recordAck(op: string, ok: boolean, code?: string, message?: string): void {
    this.state.lastAck = { op, ok, code, message };
    this.notify();
  }

  setDebrief(report: Record<string, any>): void {
    this.state.debrief = { ...this.state.debrief, ...report };
    this.notify();
  }
}
