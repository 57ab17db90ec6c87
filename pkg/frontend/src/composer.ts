/** Order composer: drafts constrained by the view, authoritative ack/nack.
 *
 * Drafts are purely local UI state; the server re-validates everything.
 * The composer only offers targets the view says are legal (prerequisites
 * satisfied, products developed, budget not exceeded), mirroring the
 * engine's own checks for a friendlier flow.
 */
import { El } from "./dom.js";
import { ClientState } from "./state.js";

export interface ComposerActions {
  getDrafts(): Record<string, any>[];
  addDraft(order: Record<string, any>): void;
  clearDrafts(): void;
  submit(): void;
}

const KIND_LABELS: Record<string, string> = {
  allocate_research: "research",
  allocate_development: "development",
  deploy_product: "deploy product",
  withdraw_product: "withdraw product",
  publish: "publish tech",
  espionage: "espionage",
  poach_talent: "poach talent",
  regulate: "regulate sector",
  tax: "tax",
  lobby: "lobby",
  collaborate: "collaborate",
  safety_investment: "safety investment",
  free_text: "free-form action",
};

export function draftTalent(drafts: Record<string, any>[]): number {
  return drafts.reduce((sum, d) => sum + (d.talent ?? 0), 0);
}

export function renderComposer(el: El, state: ClientState,
                               actions: ComposerActions): HTMLElement {
  const view = state.view;
  const root = el("section", { class: "composer", "data-testid": "composer" },
    el("h2", {}, "orders"));
  if (!view || !view.you) return root;
  const phase = view.phase;
  if (phase !== "private_actions" && phase !== "public_actions") {
    root.append(el("p", { "data-testid": "composer-closed" },
      "orders open during action phases only"));
    return root;
  }
  const tag = phase === "private_actions" ? "private" : "public";
  const you = view.you;
  const drafts = actions.getDrafts();
  const remainingTalent = you.talent_available - draftTalent(drafts);
  const sheet = state.scenario?.roles.find((r) => r.id === state.role);
  const entitled = new Set(sheet?.entitlements ?? []);

  root.append(el("p", { "data-testid": "budget" },
    `phase: ${tag} — talent remaining ${remainingTalent}, funds ${you.funds_available}`));

  const researchable = (state.scenario?.tech_tree ?? [])
    .filter((t) => !you.unlocked_techs.includes(t.id)
      && t.prerequisites.every((p) => you.unlocked_techs.includes(p)));
  const developable = (state.scenario?.product_deck ?? [])
    .filter((p) => you.unlocked_techs.includes(p.required_tech)
      && !you.developed_products.includes(p.id));
  const deployable = you.developed_products.filter((p) => !you.deployed_products.includes(p));
  const publishable = you.unlocked_techs.filter((t) => !you.published_techs.includes(t));
  const otherOrgs = Object.keys(view.orgs).filter((o) => o !== you.id);

  const form = el("div", { class: "composer-form" });
  const kindSelect = el("select", { name: "kind", "data-testid": "kind-select" }) as HTMLSelectElement;
  for (const kind of Object.keys(KIND_LABELS)) {
    if (!entitled.has(kind)) continue;
    kindSelect.append(el("option", { value: kind }, KIND_LABELS[kind]));
  }
  const fields = el("div", { class: "fields", "data-testid": "fields" });

  const renderFields = () => {
    fields.textContent = "";
    const kind = kindSelect.value;
    const talentInput = () =>
      el("input", { type: "number", name: "talent", min: 0, max: remainingTalent, value: 1 });
    const orgSelect = (name: string) => {
      const select = el("select", { name });
      for (const org of otherOrgs) select.append(el("option", { value: org }, org));
      return select;
    };
    const idSelect = (name: string, ids: string[], disabledNote: string) => {
      if (!ids.length) return el("p", { class: "note" }, disabledNote);
      const select = el("select", { name });
      for (const id of ids) select.append(el("option", { value: id }, id));
      return select;
    };
    switch (kind) {
      case "allocate_research":
        fields.append(idSelect("tech", researchable.map((t) => t.id),
          "no researchable techs (prerequisites lock the rest)"), talentInput());
        break;
      case "allocate_development":
        fields.append(idSelect("product", developable.map((p) => p.id),
          "no developable products"), talentInput());
        break;
      case "deploy_product":
        fields.append(idSelect("product", deployable, "nothing developed to deploy"));
        break;
      case "withdraw_product":
        fields.append(idSelect("product", you.deployed_products, "nothing deployed"));
        break;
      case "publish":
        fields.append(idSelect("tech", publishable, "nothing unpublished"));
        break;
      case "espionage":
        fields.append(orgSelect("target_org"), talentInput());
        break;
      case "poach_talent":
        fields.append(orgSelect("target_org"),
          el("input", { type: "number", name: "amount", min: 0, value: 1 }),
          el("input", { type: "number", name: "funds_offered", min: 0, value: 2 }));
        break;
      case "regulate":
        fields.append(idSelect("category",
          ["health", "finance", "education", "defense", "cyber", "surveillance", "consumer"],
          ""));
        break;
      case "tax":
        fields.append(orgSelect("target_org"),
          el("input", { type: "number", name: "rate_percent", min: 0, max: 100, value: 10 }));
        break;
      case "lobby":
        fields.append(orgSelect("target_org"),
          el("input", { type: "number", name: "funds", min: 0, value: 5 }));
        break;
      case "collaborate":
        fields.append(orgSelect("partner_org"),
          idSelect("tech", researchable.map((t) => t.id), "no researchable techs"),
          talentInput());
        break;
      case "safety_investment":
        fields.append(talentInput());
        break;
      case "free_text":
        fields.append(el("textarea", { name: "text", "data-testid": "free-text" }));
        break;
    }
  };
  kindSelect.addEventListener("change", renderFields);
  renderFields();

  const addButton = el("button", {
    "data-testid": "add-draft",
    onclick: () => {
      const kind = kindSelect.value;
      const order: Record<string, any> = {
        kind, issuing_role: state.role, phase_tag: tag,
      };
      for (const input of Array.from(fields.querySelectorAll("input, select, textarea"))) {
        const name = input.getAttribute("name")!;
        const raw = (input as HTMLInputElement).value;
        order[name] = (input as HTMLElement).tagName === "INPUT"
          && input.getAttribute("type") === "number" ? Number(raw) : raw;
      }
      if (kind === "allocate_research" || kind === "allocate_development") {
        order.visibility = tag;
      }
      if ((order.talent ?? 0) > remainingTalent) return; // slider-style cap
      actions.addDraft(order);
    },
  }, "add order");
  form.append(kindSelect, fields, addButton);
  root.append(form);

  root.append(el("ul", { class: "drafts", "data-testid": "drafts" },
    ...drafts.map((d, i) =>
      el("li", { "data-draft-index": i },
        `${KIND_LABELS[d.kind] ?? d.kind} ${d.tech ?? d.product ?? d.target_org ?? d.text ?? ""}`
        + (d.talent ? ` (${d.talent} talent)` : "")))));

  root.append(
    el("button", { "data-testid": "submit-orders", onclick: () => actions.submit() },
      "submit orders"),
    el("button", { "data-testid": "clear-drafts", onclick: () => actions.clearDrafts() },
      "clear"));

  const ack = state.lastAck;
  if (ack && ack.op === "submit_orders") {
    root.append(el("p", {
      class: ack.ok ? "ack" : "nack",
      "data-testid": "order-ack",
    }, ack.ok ? "orders accepted" : `rejected: ${ack.code} — ${ack.message}`));
  }
  return root;
}
