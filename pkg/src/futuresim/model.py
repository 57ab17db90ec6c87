"""Game entities, the order catalog, and scenario validation.

Everything here is plain data: construction, (de)serialization, and the
exhaustive scenario validator. All quantities are integers so that replay
digests are exact. Instances are immutable once constructed and safe to
share between threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import ParseError

SCHEMA_VERSION = 1


def canonical_json(obj) -> str:
    """Serialize with sorted keys and no whitespace; the one true byte form."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class Phase(str, Enum):
    NEGOTIATION = "negotiation"
    PRIVATE_ACTIONS = "private_actions"
    PUBLIC_ACTIONS = "public_actions"
    WORLD_UPDATE = "world_update"
    DEBRIEF = "debrief"
    FINISHED = "finished"


class OrderKind(str, Enum):
    ALLOCATE_RESEARCH = "allocate_research"
    ALLOCATE_DEVELOPMENT = "allocate_development"
    DEPLOY_PRODUCT = "deploy_product"
    WITHDRAW_PRODUCT = "withdraw_product"
    PUBLISH = "publish"
    ESPIONAGE = "espionage"
    POACH_TALENT = "poach_talent"
    REGULATE = "regulate"
    TAX = "tax"
    LOBBY = "lobby"
    COLLABORATE = "collaborate"
    SAFETY_INVESTMENT = "safety_investment"
    FREE_TEXT = "free_text"


GOVERNMENT_ONLY_ORDERS = frozenset({OrderKind.REGULATE, OrderKind.TAX})

PRODUCT_CATEGORIES = ("health", "finance", "education", "defense", "cyber", "surveillance", "consumer")

EFFECT_TARGETS = ("org_funds", "org_talent_attraction", "world_chaos", "org_influence")

GOAL_METRICS = ("org_funds", "org_tech_count", "world_stability", "org_influence")

ORG_KINDS = ("government", "corporation")

# Field schema of each order variant, beyond the common issuing_role/phase_tag.
ORDER_FIELDS: dict[OrderKind, tuple[str, ...]] = {
    OrderKind.ALLOCATE_RESEARCH: ("tech", "talent", "visibility"),
    OrderKind.ALLOCATE_DEVELOPMENT: ("product", "talent", "visibility"),
    OrderKind.DEPLOY_PRODUCT: ("product",),
    OrderKind.WITHDRAW_PRODUCT: ("product",),
    OrderKind.PUBLISH: ("tech",),
    OrderKind.ESPIONAGE: ("target_org", "talent"),
    OrderKind.POACH_TALENT: ("target_org", "amount", "funds_offered"),
    OrderKind.REGULATE: ("category",),
    OrderKind.TAX: ("target_org", "rate_percent"),
    OrderKind.LOBBY: ("target_org", "funds"),
    OrderKind.COLLABORATE: ("partner_org", "tech", "talent"),
    OrderKind.SAFETY_INVESTMENT: ("talent",),
    OrderKind.FREE_TEXT: ("text",),
}

_ORDER_FIELD_TYPES: dict[str, type] = {
    "tech": str,
    "product": str,
    "target_org": str,
    "partner_org": str,
    "category": str,
    "visibility": str,
    "text": str,
    "talent": int,
    "amount": int,
    "funds": int,
    "funds_offered": int,
    "rate_percent": int,
}

VISIBILITY_VALUES = ("public", "private")


def _expect_keys(data: dict, what: str, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    if not isinstance(data, dict):
        raise ParseError(f"{what}: expected an object, got {type(data).__name__}")
    missing = [k for k in required if k not in data]
    if missing:
        raise ParseError(f"{what}: missing fields {missing}")
    unknown = [k for k in data if k not in required and k not in optional]
    if unknown:
        raise ParseError(f"{what}: unknown fields {unknown}")


def _expect_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{what}: expected an integer, got {value!r}")
    return value


def _expect_str(value, what: str) -> str:
    if not isinstance(value, str):
        raise ParseError(f"{what}: expected a string, got {value!r}")
    return value


@dataclass(frozen=True)
class DiceRule:
    sides: int = 6
    success_threshold: int = 5

    def success_probability(self) -> float:
        return (self.sides - self.success_threshold + 1) / self.sides

    def to_dict(self) -> dict:
        return {"sides": self.sides, "success_threshold": self.success_threshold}

    @classmethod
    def from_dict(cls, data: dict) -> "DiceRule":
        _expect_keys(data, "dice", ("sides", "success_threshold"))
        return cls(_expect_int(data["sides"], "dice.sides"),
                   _expect_int(data["success_threshold"], "dice.success_threshold"))


@dataclass(frozen=True)
class ParameterEffect:
    target: str  # one of EFFECT_TARGETS
    delta: int
    scope: str  # org id, or "world" (world_chaos only)

    def to_dict(self) -> dict:
        return {"target": self.target, "delta": self.delta, "scope": self.scope}

    @classmethod
    def from_dict(cls, data: dict, what: str = "effect") -> "ParameterEffect":
        _expect_keys(data, what, ("target", "delta", "scope"))
        return cls(_expect_str(data["target"], f"{what}.target"),
                   _expect_int(data["delta"], f"{what}.delta"),
                   _expect_str(data["scope"], f"{what}.scope"))


@dataclass(frozen=True)
class TechNode:
    id: str
    name: str
    tier: int  # column, left to right
    prerequisites: tuple[str, ...]
    research_cost: int  # accumulated dice successes required
    publish_discount: int  # cost reduction once another org has published
    description: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "tier": self.tier,
            "prerequisites": list(self.prerequisites),
            "research_cost": self.research_cost,
            "publish_discount": self.publish_discount,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TechNode":
        _expect_keys(data, "tech", ("id", "name", "tier", "prerequisites", "research_cost", "publish_discount"),
                     ("description",))
        prereqs = data["prerequisites"]
        if not isinstance(prereqs, list):
            raise ParseError("tech.prerequisites: expected a list")
        return cls(
            id=_expect_str(data["id"], "tech.id"),
            name=_expect_str(data["name"], "tech.name"),
            tier=_expect_int(data["tier"], "tech.tier"),
            prerequisites=tuple(_expect_str(p, "tech.prerequisites[]") for p in prereqs),
            research_cost=_expect_int(data["research_cost"], "tech.research_cost"),
            publish_discount=_expect_int(data["publish_discount"], "tech.publish_discount"),
            description=_expect_str(data.get("description", ""), "tech.description"),
        )


@dataclass(frozen=True)
class ProductCard:
    id: str
    name: str
    required_tech: str
    dev_cost: int  # successes to develop
    effects: tuple[ParameterEffect, ...]  # recur each turn while deployed
    chaos_externality: int  # per turn while deployed; negative stabilizes
    revenue: int  # funds per turn while deployed
    category: str  # one of PRODUCT_CATEGORIES

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "required_tech": self.required_tech,
            "dev_cost": self.dev_cost,
            "effects": [e.to_dict() for e in self.effects],
            "chaos_externality": self.chaos_externality,
            "revenue": self.revenue,
            "category": self.category,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProductCard":
        _expect_keys(data, "product", ("id", "name", "required_tech", "dev_cost", "effects",
                                       "chaos_externality", "revenue", "category"))
        effects = data["effects"]
        if not isinstance(effects, list):
            raise ParseError("product.effects: expected a list")
        return cls(
            id=_expect_str(data["id"], "product.id"),
            name=_expect_str(data["name"], "product.name"),
            required_tech=_expect_str(data["required_tech"], "product.required_tech"),
            dev_cost=_expect_int(data["dev_cost"], "product.dev_cost"),
            effects=tuple(ParameterEffect.from_dict(e, "product.effects[]") for e in effects),
            chaos_externality=_expect_int(data["chaos_externality"], "product.chaos_externality"),
            revenue=_expect_int(data["revenue"], "product.revenue"),
            category=_expect_str(data["category"], "product.category"),
        )


@dataclass(frozen=True)
class OrganizationSpec:
    id: str
    name: str
    kind: str  # government | corporation
    initial_talent: int
    initial_funds: int

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "kind": self.kind,
                "initial_talent": self.initial_talent, "initial_funds": self.initial_funds}

    @classmethod
    def from_dict(cls, data: dict) -> "OrganizationSpec":
        _expect_keys(data, "organization", ("id", "name", "kind", "initial_talent", "initial_funds"))
        return cls(
            id=_expect_str(data["id"], "organization.id"),
            name=_expect_str(data["name"], "organization.name"),
            kind=_expect_str(data["kind"], "organization.kind"),
            initial_talent=_expect_int(data["initial_talent"], "organization.initial_talent"),
            initial_funds=_expect_int(data["initial_funds"], "organization.initial_funds"),
        )


@dataclass(frozen=True)
class GoalTerm:
    metric: str  # one of GOAL_METRICS
    weight: int

    def to_dict(self) -> dict:
        return {"metric": self.metric, "weight": self.weight}

    @classmethod
    def from_dict(cls, data: dict) -> "GoalTerm":
        _expect_keys(data, "goal", ("metric", "weight"))
        return cls(_expect_str(data["metric"], "goal.metric"), _expect_int(data["weight"], "goal.weight"))


@dataclass(frozen=True)
class RoleSheet:
    id: str
    title: str
    organization: str
    entitlements: frozenset[OrderKind]
    goal: tuple[GoalTerm, ...]
    briefing: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "organization": self.organization,
            "entitlements": sorted(k.value for k in self.entitlements),
            "goal": [g.to_dict() for g in self.goal],
            "briefing": self.briefing,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RoleSheet":
        _expect_keys(data, "role", ("id", "title", "organization", "entitlements", "goal", "briefing"))
        ents = data["entitlements"]
        if not isinstance(ents, list):
            raise ParseError("role.entitlements: expected a list")
        kinds = set()
        for e in ents:
            name = _expect_str(e, "role.entitlements[]")
            try:
                kinds.add(OrderKind(name))
            except ValueError:
                raise ParseError(f"role.entitlements[]: unknown order kind {name!r}") from None
        goal = data["goal"]
        if not isinstance(goal, list):
            raise ParseError("role.goal: expected a list")
        return cls(
            id=_expect_str(data["id"], "role.id"),
            title=_expect_str(data["title"], "role.title"),
            organization=_expect_str(data["organization"], "role.organization"),
            entitlements=frozenset(kinds),
            goal=tuple(GoalTerm.from_dict(g) for g in goal),
            briefing=_expect_str(data["briefing"], "role.briefing"),
        )


@dataclass(frozen=True)
class ChaosRules:
    initial: int = 20
    exposed_espionage: int = 2
    breakup: int = 1
    safety_investment_per_talent: int = -1

    def to_dict(self) -> dict:
        return {
            "initial": self.initial,
            "exposed_espionage": self.exposed_espionage,
            "breakup": self.breakup,
            "safety_investment_per_talent": self.safety_investment_per_talent,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChaosRules":
        _expect_keys(data, "chaos_rules",
                     ("initial", "exposed_espionage", "breakup", "safety_investment_per_talent"))
        return cls(*(
            _expect_int(data[k], f"chaos_rules.{k}")
            for k in ("initial", "exposed_espionage", "breakup", "safety_investment_per_talent")
        ))


@dataclass(frozen=True)
class MarketRules:
    cost_per_talent: int = 2  # funds burned per poached talent
    lobby_funds_per_influence: int = 5
    initial_free_talent: int = 4  # unallocated world talent pool at game start

    def to_dict(self) -> dict:
        return {"cost_per_talent": self.cost_per_talent,
                "lobby_funds_per_influence": self.lobby_funds_per_influence,
                "initial_free_talent": self.initial_free_talent}

    @classmethod
    def from_dict(cls, data: dict) -> "MarketRules":
        _expect_keys(data, "market",
                     ("cost_per_talent", "lobby_funds_per_influence", "initial_free_talent"))
        return cls(_expect_int(data["cost_per_talent"], "market.cost_per_talent"),
                   _expect_int(data["lobby_funds_per_influence"], "market.lobby_funds_per_influence"),
                   _expect_int(data["initial_free_talent"], "market.initial_free_talent"))


@dataclass(frozen=True)
class WorldEventSpec:
    id: str
    name: str
    threshold: int | None  # chaos level that triggers it; None = facilitator-injected only
    narrative: str
    chaos_delta: int = 0
    effects: tuple[ParameterEffect, ...] = ()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "threshold": self.threshold,
            "narrative": self.narrative,
            "chaos_delta": self.chaos_delta,
            "effects": [e.to_dict() for e in self.effects],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WorldEventSpec":
        _expect_keys(data, "event", ("id", "name", "threshold", "narrative", "chaos_delta", "effects"))
        threshold = data["threshold"]
        if threshold is not None:
            threshold = _expect_int(threshold, "event.threshold")
        effects = data["effects"]
        if not isinstance(effects, list):
            raise ParseError("event.effects: expected a list")
        return cls(
            id=_expect_str(data["id"], "event.id"),
            name=_expect_str(data["name"], "event.name"),
            threshold=threshold,
            narrative=_expect_str(data["narrative"], "event.narrative"),
            chaos_delta=_expect_int(data["chaos_delta"], "event.chaos_delta"),
            effects=tuple(ParameterEffect.from_dict(e, "event.effects[]") for e in effects),
        )


@dataclass(frozen=True)
class Scenario:
    id: str
    title: str
    start_year: int
    years_per_turn: int  # 1 or 2
    num_turns: int  # 4..8
    tech_tree: tuple[TechNode, ...]
    product_deck: tuple[ProductCard, ...]
    organizations: tuple[OrganizationSpec, ...]
    roles: tuple[RoleSheet, ...]
    chaos_rules: ChaosRules = ChaosRules()
    event_table: tuple[WorldEventSpec, ...] = ()
    dice: DiceRule = DiceRule()
    market: MarketRules = MarketRules()

    def tech(self, tech_id: str) -> TechNode | None:
        return self._tech_index().get(tech_id)

    def product(self, product_id: str) -> ProductCard | None:
        return self._product_index().get(product_id)

    def role(self, role_id: str) -> RoleSheet | None:
        return next((r for r in self.roles if r.id == role_id), None)

    def org(self, org_id: str) -> OrganizationSpec | None:
        return next((o for o in self.organizations if o.id == org_id), None)

    def org_roles(self, org_id: str) -> list[RoleSheet]:
        return [r for r in self.roles if r.organization == org_id]

    def _tech_index(self) -> dict[str, TechNode]:
        return {t.id: t for t in self.tech_tree}

    def _product_index(self) -> dict[str, ProductCard]:
        return {p.id: p for p in self.product_deck}

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "start_year": self.start_year,
            "years_per_turn": self.years_per_turn,
            "num_turns": self.num_turns,
            "tech_tree": [t.to_dict() for t in self.tech_tree],
            "product_deck": [p.to_dict() for p in self.product_deck],
            "organizations": [o.to_dict() for o in self.organizations],
            "roles": [r.to_dict() for r in self.roles],
            "chaos_rules": self.chaos_rules.to_dict(),
            "event_table": [e.to_dict() for e in self.event_table],
            "dice": self.dice.to_dict(),
            "market": self.market.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        _expect_keys(data, "scenario",
                     ("id", "title", "start_year", "years_per_turn", "num_turns", "tech_tree",
                      "product_deck", "organizations", "roles", "chaos_rules", "event_table",
                      "dice", "market"))
        for key in ("tech_tree", "product_deck", "organizations", "roles", "event_table"):
            if not isinstance(data[key], list):
                raise ParseError(f"scenario.{key}: expected a list")
        return cls(
            id=_expect_str(data["id"], "scenario.id"),
            title=_expect_str(data["title"], "scenario.title"),
            start_year=_expect_int(data["start_year"], "scenario.start_year"),
            years_per_turn=_expect_int(data["years_per_turn"], "scenario.years_per_turn"),
            num_turns=_expect_int(data["num_turns"], "scenario.num_turns"),
            tech_tree=tuple(TechNode.from_dict(t) for t in data["tech_tree"]),
            product_deck=tuple(ProductCard.from_dict(p) for p in data["product_deck"]),
            organizations=tuple(OrganizationSpec.from_dict(o) for o in data["organizations"]),
            roles=tuple(RoleSheet.from_dict(r) for r in data["roles"]),
            chaos_rules=ChaosRules.from_dict(data["chaos_rules"]),
            event_table=tuple(WorldEventSpec.from_dict(e) for e in data["event_table"]),
            dice=DiceRule.from_dict(data["dice"]),
            market=MarketRules.from_dict(data["market"]),
        )


@dataclass(frozen=True)
class Order:
    """One submitted action; the catalog is closed (see ORDER_FIELDS)."""

    kind: OrderKind
    issuing_role: str
    phase_tag: str  # "private" | "public"
    tech: str | None = None
    product: str | None = None
    target_org: str | None = None
    partner_org: str | None = None
    category: str | None = None
    visibility: str | None = None  # research/development only
    text: str | None = None
    talent: int | None = None
    amount: int | None = None
    funds: int | None = None
    funds_offered: int | None = None
    rate_percent: int | None = None

    def target_id(self) -> str:
        """Primary target used in canonical sort keys and order refs."""
        for name in ("tech", "product", "target_org", "partner_org", "category"):
            value = getattr(self, name)
            if value is not None:
                return value
        return ""

    def talent_cost(self) -> int:
        return self.talent or 0

    def funds_cost(self) -> int:
        if self.kind is OrderKind.POACH_TALENT:
            return self.funds_offered or 0
        if self.kind is OrderKind.LOBBY:
            return self.funds or 0
        return 0

    def to_dict(self) -> dict:
        data = {"kind": self.kind.value, "issuing_role": self.issuing_role, "phase_tag": self.phase_tag}
        for name in ORDER_FIELDS[self.kind]:
            data[name] = getattr(self, name)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Order":
        if not isinstance(data, dict):
            raise ParseError("order: expected an object")
        try:
            kind = OrderKind(_expect_str(data.get("kind"), "order.kind"))
        except ValueError:
            raise ParseError(f"order.kind: unknown kind {data.get('kind')!r}") from None
        fields = ORDER_FIELDS[kind]
        _expect_keys(data, f"order[{kind.value}]", ("kind", "issuing_role", "phase_tag") + fields)
        values = {}
        for name in fields:
            expected = _ORDER_FIELD_TYPES[name]
            value = data[name]
            if expected is int:
                values[name] = _expect_int(value, f"order.{name}")
            else:
                values[name] = _expect_str(value, f"order.{name}")
        phase_tag = _expect_str(data["phase_tag"], "order.phase_tag")
        if phase_tag not in VISIBILITY_VALUES:
            raise ParseError(f"order.phase_tag: expected private|public, got {phase_tag!r}")
        if "visibility" in values and values["visibility"] not in VISIBILITY_VALUES:
            raise ParseError(f"order.visibility: expected private|public, got {values['visibility']!r}")
        return cls(kind=kind, issuing_role=_expect_str(data["issuing_role"], "order.issuing_role"),
                   phase_tag=phase_tag, **values)


@dataclass(frozen=True)
class Violation:
    rule: str
    entity: str
    message: str

    def to_dict(self) -> dict:
        return {"rule": self.rule, "entity": self.entity, "message": self.message}


def _cycle_members(nodes: dict[str, tuple[str, ...]]) -> list[str]:
    """Nodes that sit on a prerequisite cycle (ignores dangling prereq ids)."""
    indegree = {n: 0 for n in nodes}
    dependents: dict[str, list[str]] = {n: [] for n in nodes}
    for node, prereqs in nodes.items():
        for p in prereqs:
            if p in nodes:
                indegree[node] += 1
                dependents[p].append(node)
    queue = [n for n, d in indegree.items() if d == 0]
    while queue:
        n = queue.pop()
        for dep in dependents[n]:
            indegree[dep] -= 1
            if indegree[dep] == 0:
                queue.append(dep)
    leftover = {n for n, d in indegree.items() if d > 0}
    cyclic = []
    for start in leftover:
        stack, seen = [p for p in nodes[start] if p in leftover], set()
        while stack:
            n = stack.pop()
            if n == start:
                cyclic.append(start)
                break
            if n in seen:
                continue
            seen.add(n)
            stack.extend(p for p in nodes[n] if p in leftover)
    return sorted(cyclic)


def validate_scenario(s: Scenario) -> list[Violation]:
    """Exhaustively check every scenario invariant; violations are data, not failures."""
    out: list[Violation] = []

    def bad(rule: str, entity: str, message: str):
        out.append(Violation(rule, entity, message))

    if not 4 <= s.num_turns <= 8:
        bad("TurnCountOutOfRange", s.id, f"num_turns must be in [4,8], got {s.num_turns}")
    if s.years_per_turn not in (1, 2):
        bad("YearsPerTurnInvalid", s.id, f"years_per_turn must be 1 or 2, got {s.years_per_turn}")
    if not 2020 <= s.start_year <= 2028:
        bad("StartYearOutOfRange", s.id, f"start_year must be in [2020,2028], got {s.start_year}")
    span = s.num_turns * s.years_per_turn
    if not 4 <= span <= 16:
        bad("SpanOutOfRange", s.id, f"covered span must be 4-16 years, got {span}")

    for label, ids in (("tech", [t.id for t in s.tech_tree]),
                       ("product", [p.id for p in s.product_deck]),
                       ("organization", [o.id for o in s.organizations]),
                       ("role", [r.id for r in s.roles]),
                       ("event", [e.id for e in s.event_table])):
        seen = set()
        for i in ids:
            if i in seen:
                bad("DuplicateId", i, f"duplicate {label} id {i!r}")
            seen.add(i)

    tech_ids = {t.id for t in s.tech_tree}
    tech_by_id = {t.id: t for t in s.tech_tree}
    for t in s.tech_tree:
        if t.research_cost < 1:
            bad("CostOutOfRange", t.id, f"tech {t.id!r} research_cost must be >= 1, got {t.research_cost}")
        if t.publish_discount < 0:
            bad("CostOutOfRange", t.id, f"tech {t.id!r} publish_discount must be >= 0")
        if t.tier < 0:
            bad("TierOrdering", t.id, f"tech {t.id!r} tier must be >= 0, got {t.tier}")
        for p in t.prerequisites:
            if p not in tech_ids:
                bad("DanglingReference", t.id, f"tech {t.id!r} requires unknown tech {p!r}")
        known = [tech_by_id[p].tier for p in t.prerequisites if p in tech_ids]
        if known and t.tier <= max(known):
            bad("TierOrdering", t.id,
                f"tech {t.id!r} tier {t.tier} must exceed max prerequisite tier {max(known)}")
    cyclic = _cycle_members({t.id: t.prerequisites for t in s.tech_tree})
    if cyclic:
        bad("CyclicTechTree", ",".join(cyclic), f"tech tree has a prerequisite cycle: {cyclic}")

    org_ids = {o.id for o in s.organizations}
    for o in s.organizations:
        if o.kind not in ORG_KINDS:
            bad("UnknownKind", o.id, f"organization {o.id!r} kind must be government|corporation")
        if o.initial_talent < 0:
            bad("NegativeQuantity", o.id, f"organization {o.id!r} initial_talent must be >= 0")
        if o.initial_funds < 0:
            bad("NegativeQuantity", o.id, f"organization {o.id!r} initial_funds must be >= 0")

    def check_effect(e: ParameterEffect, entity: str, allow_owner: bool):
        if e.target not in EFFECT_TARGETS:
            bad("UnknownParameter", entity, f"{entity}: unknown effect target {e.target!r}")
        if e.scope == "world":
            if e.target != "world_chaos":
                bad("EffectScopeInvalid", entity,
                    f"{entity}: scope 'world' is only valid for world_chaos, got {e.target!r}")
        elif e.scope == "owner":
            # "owner" resolves to the deploying org; only meaningful on product cards
            if not allow_owner or e.target == "world_chaos":
                bad("EffectScopeInvalid", entity, f"{entity}: scope 'owner' not valid here")
        elif e.scope not in org_ids:
            bad("DanglingReference", entity, f"{entity}: effect scope references unknown org {e.scope!r}")

    for p in s.product_deck:
        if p.required_tech not in tech_ids:
            bad("DanglingReference", p.id, f"product {p.id!r} requires unknown tech {p.required_tech!r}")
        if p.dev_cost < 1:
            bad("CostOutOfRange", p.id, f"product {p.id!r} dev_cost must be >= 1, got {p.dev_cost}")
        if p.category not in PRODUCT_CATEGORIES:
            bad("UnknownCategory", p.id, f"product {p.id!r} category {p.category!r} not in catalog")
        for e in p.effects:
            check_effect(e, f"product {p.id!r}", allow_owner=True)

    roles_per_org = {o.id: 0 for o in s.organizations}
    for r in s.roles:
        org = s.org(r.organization)
        if org is None:
            bad("DanglingReference", r.id, f"role {r.id!r} belongs to unknown organization {r.organization!r}")
        else:
            roles_per_org[org.id] += 1
            if org.kind == "corporation":
                forbidden = sorted(k.value for k in r.entitlements & GOVERNMENT_ONLY_ORDERS)
                if forbidden:
                    bad("GovernmentOrderOnCorporateRole", r.id,
                        f"corporate role {r.id!r} may not hold government orders {forbidden}")
        for k in r.entitlements:
            if k not in ORDER_FIELDS:
                bad("EntitlementUnknown", r.id, f"role {r.id!r} has unknown entitlement {k!r}")
        for g in r.goal:
            if g.metric not in GOAL_METRICS:
                bad("UnknownMetric", r.id, f"role {r.id!r} goal metric {g.metric!r} not in catalog")
    for org_id, n in roles_per_org.items():
        if n == 0:
            bad("EmptyOrganization", org_id, f"organization {org_id!r} has no roles")

    if not 0 <= s.chaos_rules.initial <= 100:
        bad("ChaosOutOfRange", s.id, f"initial chaos must be in [0,100], got {s.chaos_rules.initial}")
    if s.market.cost_per_talent < 1:
        bad("CostOutOfRange", s.id, "market.cost_per_talent must be >= 1")
    if s.market.lobby_funds_per_influence < 1:
        bad("CostOutOfRange", s.id, "market.lobby_funds_per_influence must be >= 1")
    if s.market.initial_free_talent < 0:
        bad("NegativeQuantity", s.id, "market.initial_free_talent must be >= 0")
    if s.dice.sides < 2 or not 1 <= s.dice.success_threshold <= s.dice.sides:
        bad("DiceRuleInvalid", s.id,
            f"dice must satisfy 1 <= success_threshold <= sides, got {s.dice.to_dict()}")
    for e in s.event_table:
        if e.threshold is not None and not 1 <= e.threshold <= 100:
            bad("ThresholdOutOfRange", e.id, f"event {e.id!r} threshold must be in [1,100]")
        for eff in e.effects:
            check_effect(eff, f"event {e.id!r}", allow_owner=False)

    return out
