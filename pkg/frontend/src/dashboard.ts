/** Player dashboard: banner, chaos gauge, org panels, tech tree, bulletin. */
import { El } from "./dom.js";
import { ClientState } from "./state.js";
import { Scenario, TechNode } from "./protocol.js";

export function renderBanner(el: El, state: ClientState): HTMLElement {
  const view = state.view;
  const banner = el("div", { class: "banner", "data-testid": "phase-banner" },
    view
      ? `Turn ${view.turn + 1}/${state.scenario?.num_turns ?? "?"} — ${view.year} — ${phaseLabel(view.phase)}`
      : `Lobby — waiting for start (${state.openRoles.length} open roles)`);
  const status = el("span", { class: `conn conn-${state.status}`, "data-testid": "conn-status" },
    state.status === "open" ? "connected" : state.status);
  banner.append(status);
  return banner;
}

function phaseLabel(phase: string): string {
  return phase.replace("_", " ");
}

export function renderChaosGauge(el: El, state: ClientState): HTMLElement {
  const chaos = state.view?.chaos ?? 0;
  const gauge = el("div", { class: "chaos", "data-testid": "chaos-gauge", "data-chaos": chaos },
    el("div", { class: "chaos-fill", style: `width:${chaos}%` }),
    el("span", { class: "chaos-label" }, `world chaos ${chaos}/100`));
  if (chaos >= 100) {
    gauge.append(el("strong", { class: "chaos-peg", "data-testid": "chaos-warning" },
      "global instability at maximum"));
  }
  return gauge;
}

export function renderBriefing(el: El, state: ClientState): HTMLElement {
  const sheet = state.scenario?.roles.find((r) => r.id === state.role);
  return el("section", { class: "briefing", "data-testid": "briefing" },
    el("h2", {}, sheet ? `${sheet.title}` : state.role),
    el("p", {}, sheet?.briefing ?? ""),
    sheet
      ? el("p", { class: "goal" },
          "goals: " + sheet.goal.map((g) => `${g.metric}×${g.weight}`).join(", "))
      : null);
}

export function renderOwnOrg(el: El, state: ClientState): HTMLElement | null {
  const you = state.view?.you;
  if (!you) return null;
  const section = el("section", { class: "own-org", "data-testid": "own-org" },
    el("h2", {}, `Your organization: ${you.id}`),
    el("ul", { class: "resources" },
      el("li", { "data-testid": "talent" },
        `talent ${you.talent_available}/${you.talent_pool} available`),
      el("li", { "data-testid": "funds" }, `funds ${you.funds_available}/${you.funds}`),
      el("li", { "data-testid": "influence" }, `influence ${you.influence}`)),
    el("h3", {}, "projects"),
    el("ul", { class: "projects" },
      ...you.projects.map((p) =>
        el("li", {
          "data-project": `${you.id}:${p.kind}:${p.target}`,
          "data-visibility": p.visibility,
        }, `${p.kind} ${p.target}: ${p.progress} (${p.visibility})`))),
    el("h3", {}, "deployed products"),
    el("ul", { class: "deployed", "data-testid": "deployed" },
      ...you.deployed_products.map((p) => el("li", { "data-product": p }, p))));
  const intelTargets = Object.keys(you.intel ?? {});
  if (intelTargets.length) {
    section.append(
      el("h3", {}, "espionage findings"),
      el("ul", { class: "intel", "data-testid": "intel" },
        ...intelTargets.map((target) =>
          el("li", {},
            `${target} (turn ${you.intel[target].turn + 1}): ` +
            you.intel[target].projects
              .map((p) => `${p.kind} ${p.target}@${p.progress}`).join(", ")))));
  }
  return section;
}

export function renderOtherOrgs(el: El, state: ClientState): HTMLElement {
  const orgs = state.view?.orgs ?? {};
  const own = state.view?.you?.id;
  const list = el("section", { class: "orgs", "data-testid": "other-orgs" },
    el("h2", {}, "organizations"));
  for (const [orgId, org] of Object.entries<any>(orgs)) {
    if (orgId === own) continue;
    list.append(el("div", { class: "org", "data-org": orgId },
      el("h3", {}, orgId),
      el("p", {}, `influence ${org.influence ?? 0}`),
      el("p", {}, `deployed: ${(org.deployed_products ?? []).join(", ") || "none"}`),
      el("p", {}, `published: ${(org.published_techs ?? []).join(", ") || "none"}`),
      el("ul", {},
        ...(org.projects ?? []).map((p: any) =>
          el("li", {
            "data-project": `${orgId}:${p.kind}:${p.target}`,
            "data-visibility": p.visibility,
          }, `${p.kind} ${p.target} (${p.visibility})`)))));
  }
  return list;
}

/** Tiered left-to-right DAG; locked techs greyed, researchable highlighted. */
export function renderTechTree(el: El, state: ClientState): HTMLElement {
  const scenario = state.scenario;
  const tree = el("section", { class: "tech-tree", "data-testid": "tech-tree" },
    el("h2", {}, "technology tree"));
  if (!scenario) return tree;
  const you = state.view?.you;
  const unlocked = new Set(you?.unlocked_techs ?? []);
  const byTier = new Map<number, TechNode[]>();
  for (const node of scenario.tech_tree) {
    if (!byTier.has(node.tier)) byTier.set(node.tier, []);
    byTier.get(node.tier)!.push(node);
  }
  const row = el("div", { class: "tiers" });
  for (const tier of [...byTier.keys()].sort((a, b) => a - b)) {
    const column = el("div", { class: "tier", "data-tier": tier });
    for (const node of byTier.get(tier)!) {
      const status = unlocked.has(node.id)
        ? "unlocked"
        : node.prerequisites.every((p) => unlocked.has(p))
          ? "available"
          : "locked";
      const progress = you?.research_progress?.[node.id] ?? 0;
      column.append(el("div", {
        class: `tech tech-${status}`,
        "data-tech": node.id,
        "data-state": status,
        title: node.description,
      },
        el("strong", {}, node.name),
        el("span", {}, ` cost ${node.research_cost}` + (progress ? `, progress ${progress}` : "")),
        node.prerequisites.length
          ? el("small", {}, ` needs ${node.prerequisites.join(", ")}`)
          : null));
    }
    row.append(column);
  }
  tree.append(row);
  return tree;
}

export function renderBulletin(el: El, state: ClientState): HTMLElement {
  const lines = state.view?.bulletin ?? [];
  return el("section", { class: "bulletin", "data-testid": "bulletin" },
    el("h2", {}, "world updates"),
    el("ul", {}, ...lines.slice(-30).map((line) => el("li", {}, line))));
}

export function renderDashboard(el: El, state: ClientState): HTMLElement {
  const root = el("div", { class: "dashboard" });
  root.append(renderBanner(el, state));
  root.append(renderChaosGauge(el, state));
  root.append(renderBriefing(el, state));
  const own = renderOwnOrg(el, state);
  if (own) root.append(own);
  root.append(renderTechTree(el, state));
  root.append(renderOtherOrgs(el, state));
  root.append(renderBulletin(el, state));
  return root;
}

export function scenarioTech(scenario: Scenario | null, techId: string): TechNode | undefined {
  return scenario?.tech_tree.find((t) => t.id === techId);
}
