/** Wire protocol types; mirrors the server's frame and view shapes. */

export const PROTOCOL_VERSION = 1;

export type Visibility = "public" | "facilitator" | { org: string } | { roles: string[] };

export interface GameEvent {
  seq: number;
  turn: number;
  phase: string;
  kind: string;
  actor: string;
  payload: Record<string, any>;
  visibility: Visibility;
}

export interface Frame {
  seq: number | null;
  kind: string;
  payload: any;
}

export interface TechNode {
  id: string;
  name: string;
  tier: number;
  prerequisites: string[];
  research_cost: number;
  publish_discount: number;
  description: string;
}

export interface ProductCard {
  id: string;
  name: string;
  required_tech: string;
  dev_cost: number;
  chaos_externality: number;
  revenue: number;
  category: string;
  effects: { target: string; delta: number; scope: string }[];
}

export interface RoleSheet {
  id: string;
  title: string;
  organization: string;
  entitlements: string[];
  goal: { metric: string; weight: number }[];
  briefing: string;
}

export interface Scenario {
  id: string;
  title: string;
  start_year: number;
  years_per_turn: number;
  num_turns: number;
  tech_tree: TechNode[];
  product_deck: ProductCard[];
  organizations: { id: string; name: string; kind: string }[];
  roles: RoleSheet[];
  role_directory?: Record<string, { title: string; organization: string }>;
}

export interface ProjectRecord {
  kind: "research" | "development";
  target: string;
  progress: number;
  visibility: "public" | "private";
}

export interface OwnOrgView {
  id: string;
  talent_pool: number;
  talent_available: number;
  funds: number;
  funds_available: number;
  influence: number;
  unlocked_techs: string[];
  published_techs: string[];
  research_progress: Record<string, number>;
  dev_progress: Record<string, number>;
  developed_products: string[];
  deployed_products: string[];
  projects: ProjectRecord[];
  pending_orders: Record<string, any>[];
  intel: Record<string, { turn: number; projects: ProjectRecord[] }>;
}

export interface PublicOrgView {
  id: string;
  influence: number;
  deployed_products: string[];
  published_techs: string[];
  unlocked_techs: string[];
  projects: ProjectRecord[];
}

export interface View {
  role: string;
  organization: string | null;
  turn: number;
  year: number;
  phase: string;
  chaos: number;
  free_talent: number;
  you: OwnOrgView | null;
  orgs: Record<string, any>;
  bulletin: string[];
  events: GameEvent[];
  unruled_free_text?: { order_ref: string; order: Record<string, any> }[];
}

export interface SessionInfo {
  session_id: string;
  scenario_id: string;
  scenario_title: string;
  status: string;
  open_roles: string[];
  turn: number | null;
  phase: string | null;
}

export interface AckPayload {
  ok: boolean;
  op: string;
  result?: Record<string, any>;
  error?: { code: string; message: string };
}

export function visibilityAdmits(v: Visibility, role: string, org: string | null): boolean {
  if (v === "public") return true;
  if (v === "facilitator") return false;
  if (typeof v === "object" && "org" in v) return v.org === org;
  if (typeof v === "object" && "roles" in v) return v.roles.includes(role);
  return false;
}
