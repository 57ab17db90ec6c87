/** End-to-end: a real server, eight simulated browser clients, one
 * facilitator, a full four-turn game with a free-text ruling and an
 * injected world event, the debrief reveal, and a log export that replays
 * to a matching digest. DOMs are audited for information leaks all along.
 */
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { JSDOM } from "jsdom";
import WebSocket from "ws";

import { GameApp } from "../src/app.js";

const PY = process.env.PYTHON ?? "python3";

interface Client {
  app: GameApp;
  dom: JSDOM;
  doc: Document;
  role: string;
  org: string | null;
}

let server: ChildProcess;
let baseUrl: string;
let sessionId: string;
let facilitatorToken: string;
let joinCodes: Record<string, string>;
let workDir: string;

const clients = new Map<string, Client>();
let facilitator: Client;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address && typeof address === "object") {
        const port = address.port;
        probe.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

async function waitFor(what: string, predicate: () => boolean, timeoutMs = 20_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await sleep(20);
  }
  throw new Error(`timed out waiting for ${what}`);
}

function makeClient(role: string, token: string): Client {
  const dom = new JSDOM(`<!doctype html><body><div id="app"></div></body>`);
  const doc = dom.window.document;
  const app = new GameApp({
    doc,
    root: doc.getElementById("app") as HTMLElement,
    baseUrl,
    sessionId,
    token,
    role,
    socketCtor: WebSocket as any,
  });
  return { app, dom, doc, role, org: null };
}

function q<T extends Element = HTMLElement>(client: Client, selector: string): T {
  const node = client.doc.querySelector(selector);
  if (!node) throw new Error(`${client.role}: no element matches ${selector}`);
  return node as T;
}

function click(client: Client, selector: string): void {
  (q<HTMLElement>(client, selector)).click();
}

function setValue(client: Client, selector: string, value: string): void {
  const input = q<HTMLInputElement>(client, selector);
  input.value = value;
  input.dispatchEvent(new client.dom.window.Event("change"));
}

async function submitDraft(client: Client, kind: string,
                           fields: Record<string, string> = {}): Promise<void> {
  setValue(client, '[data-testid="kind-select"]', kind);
  for (const [name, value] of Object.entries(fields)) {
    setValue(client, `[data-testid="fields"] [name="${name}"]`, value);
  }
  click(client, '[data-testid="add-draft"]');
  const before = client.app.store.state.lastAck; // acks are fresh objects
  click(client, '[data-testid="submit-orders"]');
  await waitFor(`${client.role} order ack`, () => {
    const ack = client.app.store.state.lastAck;
    return ack !== before && ack?.op === "submit_orders";
  });
  const ack = client.app.store.state.lastAck!;
  if (!ack.ok) throw new Error(`${client.role} orders rejected: ${ack.code} ${ack.message}`);
}

async function facilitatorAdvance(): Promise<void> {
  await waitFor("advance button enabled", () => {
    const button = facilitator.doc.querySelector('[data-testid="advance-phase"]');
    return !!button && !(button as HTMLButtonElement).disabled;
  });
  const before = facilitator.app.store.state.lastAck;
  click(facilitator, '[data-testid="advance-phase"]');
  await waitFor("advance ack", () => facilitator.app.store.state.lastAck !== before
    && facilitator.app.store.state.lastAck?.op === "advance_phase");
  expect(facilitator.app.store.state.lastAck?.ok).toBe(true);
}

async function waitPhase(phase: string): Promise<void> {
  await waitFor(`all clients in phase ${phase}`, () =>
    [facilitator, ...clients.values()].every((c) => c.app.store.state.view?.phase === phase));
}

function privateTruth(): Set<string> {
  // the facilitator's unredacted view is the oracle for what is private
  const orgs = facilitator.app.store.state.view?.orgs ?? {};
  const secrets = new Set<string>();
  for (const [orgId, org] of Object.entries<any>(orgs)) {
    for (const [key, visibility] of Object.entries<any>(org.project_visibility ?? {})) {
      if (visibility === "private") {
        const [kind, target] = key.split(":", 2);
        secrets.add(`${orgId}:${kind}:${target}`);
      }
    }
  }
  return secrets;
}

function auditLeaks(secretText: string): void {
  const secrets = privateTruth();
  for (const client of clients.values()) {
    const own = client.app.store.state.view?.you?.id ?? null;
    for (const node of client.doc.querySelectorAll("[data-project]")) {
      const marker = node.getAttribute("data-project")!;
      if (!marker.startsWith(`${own}:`)) {
        expect(secrets.has(marker),
          `${client.role} (org ${own}) renders foreign private project ${marker}`).toBe(false);
      }
    }
    if (own !== "tencent") {
      expect(client.doc.body.textContent,
        `${client.role} must not see tencent's free-text order`)
        .not.toContain(secretText);
    }
  }
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "futuresim-e2e-"));
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  server = spawn(PY, ["-m", "futuresim.cli", "host",
                      "--bind", `127.0.0.1:${port}`,
                      "--data-dir", join(workDir, "data")],
                 { stdio: ["ignore", "pipe", "pipe"] });
  let serverLog = "";
  server.stdout?.on("data", (chunk) => { serverLog += chunk; });
  server.stderr?.on("data", (chunk) => { serverLog += chunk; });
  await waitFor("server up", () => serverLog.includes("Uvicorn running"), 30_000);

  const created = await fetch(`${baseUrl}/api/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ scenario_id: "default", seed: 20260808, config: { num_turns: 4 } }),
  });
  expect(created.ok).toBe(true);
  const body = await created.json();
  sessionId = body.session_id;
  facilitatorToken = body.facilitator_token;
  joinCodes = body.join_codes;
});

afterAll(() => {
  for (const client of clients.values()) client.app.stop();
  facilitator?.app.stop();
  server?.kill("SIGINT");
});

describe("full game through the browser client", () => {
  const FREE_TEXT = "Acquire a struggling robotics startup before anyone notices";
  const PACT = "quiet pact: no espionage between our governments this decade";
  const INJECTION = "Solar storm knocks out three regional data centres";

  it("joins eight players and starts the game", async () => {
    expect(Object.keys(joinCodes)).toHaveLength(8);
    for (const [role, code] of Object.entries(joinCodes)) {
      const joined = await fetch(`${baseUrl}/api/sessions/${sessionId}/join`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ join_code: code, player_name: `sim-${role}` }),
      });
      expect(joined.ok).toBe(true);
      const payload = await joined.json();
      expect(payload.briefing.length).toBeGreaterThan(20);
      const client = makeClient(role, payload.player_token);
      clients.set(role, client);
      await client.app.start();
    }
    facilitator = makeClient("facilitator", facilitatorToken);
    await facilitator.app.start();

    await waitFor("start button ready", () => {
      const button = facilitator.doc.querySelector('[data-testid="start-game"]');
      return !!button && !(button as HTMLButtonElement).disabled;
    });
    click(facilitator, '[data-testid="start-game"]');
    await waitPhase("negotiation");

    for (const client of clients.values()) {
      expect(q(client, '[data-testid="phase-banner"]').textContent).toContain("negotiation");
      expect(q(client, '[data-testid="own-org"]').textContent).toContain("talent");
      expect(client.doc.querySelectorAll("[data-tech]").length).toBe(12);
    }
  });

  it("plays four turns with a ruling and an injected event", async () => {
    for (let turn = 0; turn < 4; turn++) {
      // negotiation: a private bilateral message on the first turn
      if (turn === 0) {
        const us = clients.get("us_president")!;
        const option = q<HTMLOptionElement>(us, '[data-testid="recipients"] option[value="prc_president"]');
        option.selected = true;
        setValue(us, '[data-testid="message-text"]', PACT);
        const beforeMessage = us.app.store.state.lastAck;
        click(us, '[data-testid="send-message"]');
        await waitFor("message ack", () =>
          us.app.store.state.lastAck !== beforeMessage
          && us.app.store.state.lastAck?.op === "submit_message"
          && us.app.store.state.lastAck.ok);
        await waitFor("prc sees the pact", () =>
          clients.get("prc_president")!.app.store.state.messages
            .some((m) => m.text === PACT));
        expect(clients.get("tencent_ceo")!.app.store.state.messages
          .some((m) => m.text === PACT)).toBe(false);
      }
      await facilitatorAdvance();
      await waitPhase("private_actions");

      // private actions: every player quietly researches; tencent files free text once
      for (const client of clients.values()) {
        await submitDraft(client, "allocate_research", { talent: "1" });
      }
      if (turn === 0) {
        const ceo = clients.get("tencent_ceo")!;
        await submitDraft(ceo, "free_text", { text: FREE_TEXT });
        await waitFor("facilitator sees unruled order", () =>
          (facilitator.app.store.state.view?.unruled_free_text?.length ?? 0) === 1);
        const advanceButton = q<HTMLButtonElement>(facilitator, '[data-testid="advance-phase"]');
        expect(advanceButton.disabled).toBe(true);
        expect(advanceButton.getAttribute("data-unruled")).toBe("1");

        const ref = facilitator.app.store.state.view!.unruled_free_text![0].order_ref;
        setValue(facilitator, `[data-testid="narrative-${ref}"]`,
                 "The acquisition closes quietly; talent and IP absorbed.");
        click(facilitator, `[data-testid="rule-${ref}"]`);
        await waitFor("ruling accepted", () =>
          (facilitator.app.store.state.view?.unruled_free_text?.length ?? 0) === 0);
      }
      if (turn === 1) {
        setValue(facilitator, '[data-testid="inject-name"]', "Solar Storm");
        setValue(facilitator, '[data-testid="inject-narrative"]', INJECTION);
        setValue(facilitator, '[data-testid="inject-chaos"]', "5");
        const beforeInject = facilitator.app.store.state.lastAck;
        click(facilitator, '[data-testid="inject-event"]');
        await waitFor("injection ack", () =>
          facilitator.app.store.state.lastAck !== beforeInject
          && facilitator.app.store.state.lastAck?.op === "inject_event"
          && facilitator.app.store.state.lastAck.ok);
      }
      auditLeaks(FREE_TEXT);

      await facilitatorAdvance();
      await waitPhase("public_actions");
      await facilitatorAdvance(); // resolves the turn
      if (turn < 3) {
        await waitPhase("negotiation");
      } else {
        await waitPhase("debrief");
      }
      auditLeaks(FREE_TEXT);
      if (turn === 1) {
        await waitFor("injected event reaches bulletins", () =>
          [...clients.values()].every((c) =>
            q(c, '[data-testid="bulletin"]').textContent!.includes(INJECTION)));
      }
    }
    const view = facilitator.app.store.state.view!;
    expect(view.turn).toBe(4);
    expect(view.phase).toBe("debrief");
  });

  it("debrief reveals every private project on every client", async () => {
    const secretsBefore = privateTruth();
    expect(secretsBefore.size).toBeGreaterThan(0);

    click(facilitator, '[data-testid="debrief"]');
    await waitFor("all clients hold the full debrief report", () =>
      [facilitator, ...clients.values()].every((c) =>
        c.doc.querySelector('[data-testid="debrief-screen"]') !== null
        && c.app.store.state.debrief?.private_projects !== undefined));

    const report = facilitator.app.store.state.debrief!;
    const revealed: string[] = [];
    for (const [org, projects] of Object.entries<any>(report.private_projects)) {
      for (const p of projects) revealed.push(`${org}:${p.kind}:${p.target}`);
    }
    expect(revealed.length).toBeGreaterThan(0);

    for (const client of clients.values()) {
      const shown = new Set(
        Array.from(client.doc.querySelectorAll('[data-testid="revealed-projects"] [data-project]'))
          .map((node) => node.getAttribute("data-project")));
      for (const marker of revealed) {
        expect(shown.has(marker), `${client.role} debrief must reveal ${marker}`).toBe(true);
      }
      expect(client.doc.querySelectorAll('[data-testid="score-table"] [data-role]').length).toBe(8);
      expect(client.doc.querySelectorAll(".was-hidden").length).toBeGreaterThan(0);
      expect(q(client, '[data-testid="export-log"]').getAttribute("href")).toContain("/log?token=");
    }
  });

  it("exported log replays to the digest the server recorded", async () => {
    const anyClient = clients.get("alphabet_lab")!;
    const exported = await fetch(q(anyClient, '[data-testid="export-log"]').getAttribute("href")!);
    expect(exported.ok).toBe(true);
    const text = await exported.text();
    const lines = text.trim().split("\n");
    const trailer = JSON.parse(lines[lines.length - 1]);
    expect(trailer.state_sha256).toMatch(/^[0-9a-f]{64}$/);

    const logPath = join(workDir, "export.jsonl");
    writeFileSync(logPath, text);
    const stdout = execFileSync(PY, ["-m", "futuresim.cli", "replay", logPath, "--json"],
                                { encoding: "utf-8" });
    const summary = JSON.parse(stdout);
    expect(summary.state_digest).toBe(trailer.state_sha256);
    expect(summary.phase).toBe("finished");
    expect(summary.turn).toBe(4);

    const debriefOut = execFileSync(
      PY, ["-m", "futuresim.cli", "replay", logPath, "--debrief", "--json"],
      { encoding: "utf-8" });
    const parsed = JSON.parse(debriefOut);
    expect(Object.keys(parsed.debrief.scores)).toHaveLength(8);
  });
});
