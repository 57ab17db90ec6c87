/** Debrief screen: full reveal, score table, log export. */
import { El } from "./dom.js";
import { ClientState } from "./state.js";

export function renderDebrief(el: El, state: ClientState, exportUrl: string): HTMLElement {
  const root = el("section", { class: "debrief", "data-testid": "debrief-screen" },
    el("h2", {}, "debrief — all hidden state revealed"));

  const scores = state.debrief?.scores as Record<string, any> | undefined;
  if (scores) {
    const table = el("table", { class: "scores", "data-testid": "score-table" },
      el("tr", {}, el("th", {}, "role"), el("th", {}, "score"), el("th", {}, "breakdown")));
    for (const [role, s] of Object.entries(scores)) {
      table.append(el("tr", { "data-role": role },
        el("td", {}, role),
        el("td", { "data-testid": `score-${role}` }, String(s.total)),
        el("td", {}, (s.terms ?? [])
          .map((t: any) => `${t.metric}×${t.weight}=${t.points}`).join(", "))));
    }
    root.append(table);
  }

  const projects = state.debrief?.private_projects as Record<string, any[]> | undefined;
  if (projects) {
    const reveal = el("ul", { class: "revealed", "data-testid": "revealed-projects" });
    for (const [org, list] of Object.entries(projects)) {
      for (const p of list) {
        reveal.append(el("li", { "data-project": `${org}:${p.kind}:${p.target}` },
          `${org}: ${p.kind} ${p.target} (progress ${p.progress}) `,
          el("em", { class: "was-hidden" }, "was hidden")));
      }
    }
    root.append(el("h3", {}, "formerly private projects"), reveal);
  }

  // the report carries the unredacted log; fall back to the player's own stream
  const log = (state.debrief?.event_log as any[] | undefined) ?? state.events;
  const timeline = el("ol", { class: "timeline", "data-testid": "timeline" });
  for (const event of log) {
    const hidden = event.visibility !== "public";
    timeline.append(el("li", { "data-seq": event.seq, "data-kind": event.kind },
      `#${event.seq} t${event.turn} ${event.kind}`,
      hidden ? el("em", { class: "was-hidden" }, " (was hidden)") : null));
  }
  root.append(el("h3", {}, "timeline"), timeline);

  root.append(el("a", {
    href: exportUrl, download: "game-log.jsonl", "data-testid": "export-log",
  }, "download full event log (JSONL)"));
  return root;
}
