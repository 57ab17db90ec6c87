/** Negotiation panel: per-recipient and broadcast threads. */
import { El } from "./dom.js";
import { ClientState } from "./state.js";

export interface NegotiationActions {
  sendMessage(to: string[], text: string): void;
}

export function renderNegotiation(el: El, state: ClientState,
                                  actions: NegotiationActions): HTMLElement {
  const root = el("section", { class: "negotiation", "data-testid": "negotiation" },
    el("h2", {}, "negotiation"));
  const roles = (state.scenario?.roles ?? []).map((r) => r.id)
    .filter((r) => r !== state.role);

  const threads = el("ul", { class: "threads", "data-testid": "threads" });
  for (const message of state.messages) {
    threads.append(el("li", { "data-from": message.from },
      `[turn ${message.turn + 1}] ${message.from} → ${message.to.join(", ")}: ${message.text}`));
  }
  root.append(threads);

  const open = state.view?.phase === "negotiation";
  if (!open) {
    root.append(el("p", { "data-testid": "negotiation-closed" },
      "messaging opens during the negotiation phase"));
    return root;
  }
  const recipients = el("select", { name: "to", multiple: true, "data-testid": "recipients" });
  for (const role of roles) recipients.append(el("option", { value: role }, role));
  const text = el("input", { type: "text", name: "text", "data-testid": "message-text" });
  root.append(recipients, text,
    el("button", {
      "data-testid": "send-message",
      onclick: () => {
        const selected = Array.from((recipients as HTMLSelectElement).selectedOptions)
          .map((o) => o.value);
        const to = selected.length ? selected : roles; // empty selection = broadcast
        const body = (text as HTMLInputElement).value.trim();
        if (body) actions.sendMessage(to, body);
      },
    }, "send"));
  return root;
}
