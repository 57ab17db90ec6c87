/** Application shell: wires the connection, the store, and the screens. */
import { GameConnection, SocketCtor } from "./connection.js";
import { makeEl } from "./dom.js";
import { renderDashboard } from "./dashboard.js";
import { renderComposer } from "./composer.js";
import { renderNegotiation } from "./negotiation.js";
import { renderFacilitator } from "./facilitator.js";
import { renderDebrief } from "./debrief.js";
import { Store } from "./state.js";

export interface AppOptions {
  doc: Document;
  root: HTMLElement;
  baseUrl: string; // e.g. http://127.0.0.1:8000
  sessionId: string;
  token: string;
  role: string; // role id or "facilitator"
  socketCtor?: SocketCtor;
}

export class GameApp {
  readonly store: Store;
  readonly connection: GameConnection;
  private readonly el;
  private drafts: Record<string, any>[] = [];

  constructor(private readonly opts: AppOptions) {
    this.store = new Store(opts.role);
    this.el = makeEl(opts.doc);
    const wsUrl = opts.baseUrl.replace(/^http/, "ws")
      + `/api/sessions/${opts.sessionId}/ws`;
    this.connection = new GameConnection(wsUrl, opts.token, {
      onStatus: (status) => this.store.setStatus(status),
      onWelcome: (payload) => this.store.applyWelcome(payload),
      onLobby: (payload) => this.store.applyLobby(payload),
      onEvent: (event) => this.store.applyEvent(event),
      onView: (view) => this.store.applyView(view),
      onDebrief: (report) => this.store.setDebrief(report),
    }, opts.socketCtor);
  }

  async start(): Promise<void> {
    this.store.subscribe(() => this.render());
    await this.connection.connect();
    this.render();
  }

  stop(): void {
    this.connection.close();
  }

  exportUrl(): string {
    return `${this.opts.baseUrl}/api/sessions/${this.opts.sessionId}/log`
      + `?token=${encodeURIComponent(this.opts.token)}`;
  }

  private async command(op: string, args: Record<string, any> = {}): Promise<boolean> {
    const ack = await this.connection.command(op, args);
    this.store.recordAck(op, ack.ok, ack.error?.code, ack.error?.message);
    if (ack.ok && op === "debrief" && ack.result?.report) {
      this.store.setDebrief(ack.result.report);
    }
    return ack.ok;
  }

  // actions used by the screens and by end-to-end tests
  submitDrafts = async (): Promise<boolean> => {
    const ok = await this.command("submit_orders", { orders: this.drafts });
    if (ok) this.drafts = [];
    this.render();
    return ok;
  };

  addDraft = (order: Record<string, any>): void => {
    this.drafts.push(order);
    this.render();
  };

  clearDrafts = (): void => {
    this.drafts = [];
    this.render();
  };

  sendMessage = (to: string[], text: string): Promise<boolean> =>
    this.command("submit_message", { to, text });

  startGame = (): Promise<boolean> => this.command("start_game");
  advancePhase = (): Promise<boolean> => this.command("advance_phase");
  debrief = (): Promise<boolean> => this.command("debrief");

  ruleFreeText = (orderRef: string, narrative: string,
                  deltas: Record<string, any>): Promise<boolean> =>
    this.command("rule_free_text", { order_ref: orderRef, narrative, deltas });

  injectEvent = (name: string, narrative: string, chaosDelta: number): Promise<boolean> =>
    this.command("inject_event", { name, narrative, chaos_delta: chaosDelta });

  render(): void {
    const { root, doc } = this.opts;
    const el = this.el;
    const state = this.store.state;
    root.textContent = "";
    const app = el("div", { class: "app", "data-role": state.role });

    if (state.status === "closed") {
      app.append(el("div", { class: "banner-disconnect", "data-testid": "disconnect-banner" },
        "connection lost — attempting to resync"));
    }

    if (state.role === "facilitator") {
      app.append(renderDashboard(el, state));
      app.append(renderFacilitator(el, state, this));
      if (state.debrief) app.append(renderDebrief(el, state, this.exportUrl()));
      root.append(app);
      return;
    }

    app.append(renderDashboard(el, state));
    if (state.sessionStatus === "finished" || state.debrief) {
      app.append(renderDebrief(el, state, this.exportUrl()));
    } else {
      app.append(renderComposer(el, state, {
        getDrafts: () => this.drafts,
        addDraft: this.addDraft,
        clearDrafts: this.clearDrafts,
        submit: () => void this.submitDrafts(),
      }));
      app.append(renderNegotiation(el, state, {
        sendMessage: (to, text) => void this.sendMessage(to, text),
      }));
    }
    root.append(app);
  }
}

/** Browser entry point: /?session=...&token=...&role=... */
export function mountFromLocation(doc: Document): GameApp | null {
  const params = new URLSearchParams(doc.defaultView?.location.search ?? "");
  const sessionId = params.get("session");
  const token = params.get("token");
  const role = params.get("role") ?? "player";
  if (!sessionId || !token) return null;
  const root = doc.getElementById("app") ?? doc.body;
  const app = new GameApp({
    doc,
    root: root as HTMLElement,
    baseUrl: doc.defaultView!.location.origin,
    sessionId,
    token,
    role,
  });
  void app.start();
  return app;
}
