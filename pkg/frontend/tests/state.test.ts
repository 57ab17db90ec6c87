/** Unit tests: frame dispatch, seq buffering/dedup, store folds, rendering. */
import { describe, expect, it } from "vitest";
import { JSDOM } from "jsdom";

import { GameConnection } from "../src/connection.js";
import { Store } from "../src/state.js";
import { makeEl } from "../src/dom.js";
import { renderDashboard } from "../src/dashboard.js";
import { visibilityAdmits } from "../src/protocol.js";

class FakeSocket {
  static last: FakeSocket;
  sent: string[] = [];
  onopen: ((ev?: any) => void) | null = null;
  onmessage: ((ev: { data: any }) => void) | null = null;
  onclose: ((ev?: any) => void) | null = null;
  onerror: ((ev?: any) => void) | null = null;

  constructor(public url: string) {
    FakeSocket.last = this;
    queueMicrotask(() => {
      this.onopen?.();
      this.deliver({ seq: null, kind: "welcome", payload: { role: "r1", session: {} } });
    });
  }

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.onclose?.();
  }

  deliver(frame: any): void {
    this.onmessage?.({ data: JSON.stringify(frame) });
  }
}

function eventFrame(seq: number, kind = "message"): any {
  return {
    seq,
    kind: "event",
    payload: { seq, turn: 0, phase: "negotiation", kind, actor: "r1",
               payload: { from: "r1", to: ["r2"], text: `m${seq}` }, visibility: "public" },
  };
}

describe("GameConnection", () => {
  it("delivers events in order, buffering gaps and dropping repeats", async () => {
    const seen: number[] = [];
    const conn = new GameConnection("ws://x", "tok", {
      onEvent: (e) => seen.push(e.seq),
    }, FakeSocket as any, -1);
    await conn.connect();
    const socket = FakeSocket.last;
    socket.deliver(eventFrame(0));
    socket.deliver(eventFrame(3)); // ahead of the gap: buffered
    socket.deliver(eventFrame(2));
    socket.deliver(eventFrame(1)); // fills the gap, releases 1..3
    socket.deliver(eventFrame(2)); // repeat: dropped
    expect(seen).toEqual([0, 1, 2, 3]);
    expect(conn.lastSeenSeq).toBe(3);
  });

  it("resumes from last_seen_seq", async () => {
    const conn = new GameConnection("ws://x", "tok", {}, FakeSocket as any, 41);
    await conn.connect();
    const hello = JSON.parse(FakeSocket.last.sent[0]);
    expect(hello.kind).toBe("hello");
    expect(hello.payload.last_seen_seq).toBe(41);
  });

  it("matches acks to command seq", async () => {
    const conn = new GameConnection("ws://x", "tok", {}, FakeSocket as any);
    await conn.connect();
    const pending = conn.command("advance_phase");
    const sent = JSON.parse(FakeSocket.last.sent.at(-1)!);
    FakeSocket.last.deliver({ seq: sent.seq, kind: "ack",
                              payload: { ok: true, op: "advance_phase" } });
    await expect(pending).resolves.toMatchObject({ ok: true });
  });
});

describe("Store", () => {
  it("folds messages and finish events", () => {
    const store = new Store("r1");
    store.applyEvent(eventFrame(0).payload);
    expect(store.state.messages).toHaveLength(1);
    store.applyEvent({ seq: 1, turn: 3, phase: "debrief", kind: "game_finished",
                       actor: "facilitator", payload: { scores: { r1: { total: 5 } } },
                       visibility: "public" } as any);
    expect(store.state.sessionStatus).toBe("finished");
    expect(store.state.debrief?.scores.r1.total).toBe(5);
  });
});

describe("rendering", () => {
  it("never renders other orgs' private projects and pegs the chaos gauge", () => {
    const dom = new JSDOM("<body></body>");
    const el = makeEl(dom.window.document);
    const store = new Store("r1");
    store.state.scenario = {
      id: "s", title: "t", start_year: 2025, years_per_turn: 2, num_turns: 4,
      tech_tree: [{ id: "a", name: "A", tier: 0, prerequisites: [], research_cost: 2,
                    publish_discount: 1, description: "" }],
      product_deck: [], organizations: [], roles: [
        { id: "r1", title: "R1", organization: "o1", entitlements: [], goal: [], briefing: "hi" }],
    } as any;
    store.state.view = {
      role: "r1", organization: "o1", turn: 0, year: 2025, phase: "negotiation",
      chaos: 100, free_talent: 0,
      you: { id: "o1", talent_pool: 5, talent_available: 5, funds: 10, funds_available: 10,
             influence: 0, unlocked_techs: [], published_techs: [], research_progress: {},
             dev_progress: {}, developed_products: [], deployed_products: [],
             projects: [], pending_orders: [], intel: {} },
      orgs: { o2: { id: "o2", influence: 0, deployed_products: [], published_techs: [],
                    unlocked_techs: [], projects: [{ kind: "research", target: "a",
                                                     progress: 1, visibility: "public" }] } },
      bulletin: [], events: [],
    } as any;
    const node = renderDashboard(el, store.state);
    dom.window.document.body.append(node);
    const projects = dom.window.document.querySelectorAll("[data-project]");
    for (const project of projects) {
      expect(project.getAttribute("data-visibility")).toBe("public");
    }
    expect(dom.window.document.querySelector('[data-testid="chaos-warning"]')).toBeTruthy();
    expect(dom.window.document.querySelector('[data-tech="a"]')!.getAttribute("data-state"))
      .toBe("available");
  });
});

describe("visibilityAdmits", () => {
  it("mirrors the server scoping rules", () => {
    expect(visibilityAdmits("public", "r", "o")).toBe(true);
    expect(visibilityAdmits("facilitator", "r", "o")).toBe(false);
    expect(visibilityAdmits({ org: "o" }, "r", "o")).toBe(true);
    expect(visibilityAdmits({ org: "x" }, "r", "o")).toBe(false);
    expect(visibilityAdmits({ roles: ["r"] }, "r", "o")).toBe(true);
    expect(visibilityAdmits({ roles: ["z"] }, "r", "o")).toBe(false);
  });
});
