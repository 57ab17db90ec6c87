/** Facilitator console: unredacted state, rulings, injection, pacing. */
import { El } from "./dom.js";
import { ClientState } from "./state.js";

export interface FacilitatorActions {
  startGame(): void;
  advancePhase(): void;
  ruleFreeText(orderRef: string, narrative: string, deltas: Record<string, any>): void;
  injectEvent(name: string, narrative: string, chaosDelta: number): void;
  debrief(): void;
}

export function renderFacilitator(el: El, state: ClientState,
                                  actions: FacilitatorActions): HTMLElement {
  const root = el("section", { class: "facilitator", "data-testid": "facilitator-console" },
    el("h2", {}, "facilitator console"));

  if (state.sessionStatus === "lobby") {
    root.append(
      el("p", {}, `open roles: ${state.openRoles.join(", ") || "none — ready to start"}`),
      el("button", {
        "data-testid": "start-game",
        disabled: state.openRoles.length > 0,
        onclick: () => actions.startGame(),
      }, "start game"));
    return root;
  }

  const view = state.view;
  if (!view) return root;

  // unredacted org table
  const table = el("table", { class: "org-table", "data-testid": "org-table" });
  for (const [orgId, org] of Object.entries<any>(view.orgs)) {
    table.append(el("tr", {},
      el("td", {}, orgId),
      el("td", {}, `talent ${org.talent_pool}`),
      el("td", {}, `funds ${org.funds}`),
      el("td", {}, `influence ${org.influence}`),
      el("td", {}, `techs ${(org.unlocked_techs ?? []).length}`),
      el("td", {}, (org.project_visibility
        ? Object.entries(org.project_visibility)
            .map(([k, v]) => `${k}=${v}`).join(" ")
        : ""))));
  }
  root.append(table);

  const unruled = view.unruled_free_text ?? [];
  const queue = el("div", { class: "unruled", "data-testid": "unruled-queue" },
    el("h3", {}, `unruled free-text orders (${unruled.length})`));
  for (const item of unruled) {
    const narrative = el("input", { type: "text", name: "narrative",
                                    "data-testid": `narrative-${item.order_ref}` });
    const chaos = el("input", { type: "number", name: "chaos", value: 0 });
    const influence = el("input", { type: "number", name: "influence", value: 0 });
    const funds = el("input", { type: "number", name: "funds", value: 0 });
    queue.append(el("div", { class: "ruling", "data-order-ref": item.order_ref },
      el("p", {}, `${item.order.issuing_role}: "${item.order.text}"`),
      narrative, el("label", {}, "chaos"), chaos,
      el("label", {}, "influence"), influence,
      el("label", {}, "funds"), funds,
      el("button", {
        "data-testid": `rule-${item.order_ref}`,
        onclick: () => actions.ruleFreeText(
          item.order_ref,
          (narrative as HTMLInputElement).value,
          {
            chaos: Number((chaos as HTMLInputElement).value),
            influence: Number((influence as HTMLInputElement).value),
            funds: Number((funds as HTMLInputElement).value),
          }),
      }, "rule")));
  }
  root.append(queue);

  const injectName = el("input", { type: "text", name: "name", "data-testid": "inject-name" });
  const injectNarrative = el("input", { type: "text", name: "narrative",
                                        "data-testid": "inject-narrative" });
  const injectChaos = el("input", { type: "number", name: "chaos_delta", value: 0,
                                    "data-testid": "inject-chaos" });
  root.append(el("div", { class: "inject" },
    el("h3", {}, "inject world event / amend chaos"),
    injectName, injectNarrative, injectChaos,
    el("button", {
      "data-testid": "inject-event",
      onclick: () => actions.injectEvent(
        (injectName as HTMLInputElement).value || "facilitator event",
        (injectNarrative as HTMLInputElement).value,
        Number((injectChaos as HTMLInputElement).value)),
    }, "queue event")));

  const finished = view.phase === "debrief" || view.phase === "finished";
  root.append(el("button", {
    "data-testid": "advance-phase",
    disabled: unruled.length > 0 || finished,
    "data-unruled": unruled.length,
    onclick: () => actions.advancePhase(),
  }, unruled.length ? `advance blocked (${unruled.length} unruled)` : "advance phase"));

  if (finished) {
    root.append(el("button", { "data-testid": "debrief", onclick: () => actions.debrief() },
      "run debrief"));
  }

  const ack = state.lastAck;
  if (ack && !ack.ok) {
    root.append(el("p", { class: "nack", "data-testid": "facilitator-error" },
      `${ack.op} failed: ${ack.code} — ${ack.message}`));
  }
  return root;
}
