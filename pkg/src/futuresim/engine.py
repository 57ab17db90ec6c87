"""The authoritative, deterministic, event-sourced rules engine.

A game is a sequence of immutable events; the world state is a fold over
them (`_apply` is the only mutator). Commands validate against the current
state, emit events, and apply them, so a live game and a replay of its log
always agree bit for bit.

The engine trusts its caller about identity: transports (server, CLI) are
responsible for authenticating who may invoke facilitator operations.

Concurrency: one Game is a sequential state machine; callers must
serialize mutations through a single logical queue. Distinct games are
fully independent.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from . import events as ev
from . import rng
from .errors import (
    AlreadyRuled,
    CorruptLog,
    IncompleteAssignment,
    InsufficientFunds,
    InsufficientTalent,
    InvalidScenario,
    NotEntitled,
    PrerequisiteLocked,
    UnknownOrder,
    UnknownRole,
    UnknownTarget,
    UnruledFreeText,
    WrongPhase,
)
from .events import GameEvent, Visibility
from .model import (
    Order,
    OrderKind,
    Phase,
    PRODUCT_CATEGORIES,
    Scenario,
    canonical_json,
    validate_scenario,
)

STATE_SCHEMA = 1


def _clamp(value: int, lo: int, hi: int) -> int:
    return max(lo, min(hi, value))


def update_chaos(chaos: int, product_deltas: int, order_deltas: int,
                 facilitator_deltas: int) -> int:
    """Next chaos value: clamped sum of deployed-product externalities,
    order-driven deltas (exposed espionage, safety investment), and
    facilitator ruling deltas."""
    return _clamp(chaos + product_deltas + order_deltas + facilitator_deltas, 0, 100)


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class OrganizationState:
    id: str
    talent_pool: int
    funds: int
    influence: int = 0
    unlocked_techs: set[str] = field(default_factory=set)
    public_unlocked: set[str] = field(default_factory=set)
    published_techs: set[str] = field(default_factory=set)
    research_progress: dict[str, int] = field(default_factory=dict)
    dev_progress: dict[str, int] = field(default_factory=dict)
    developed_products: set[str] = field(default_factory=set)
    deployed_products: set[str] = field(default_factory=set)
    # "research:<tech>" / "development:<product>" -> "private" | "public"
    project_visibility: dict[str, str] = field(default_factory=dict)

    def projects(self) -> list[dict]:
        out = []
        for key in sorted(self.project_visibility):
            kind, target = key.split(":", 1)
            progress = (self.research_progress if kind == "research" else self.dev_progress).get(target, 0)
            out.append({"kind": kind, "target": target, "progress": progress,
                        "visibility": self.project_visibility[key]})
        return out

    def private_projects(self) -> list[dict]:
        return [p for p in self.projects() if p["visibility"] == "private"]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "talent_pool": self.talent_pool,
            "funds": self.funds,
            "influence": self.influence,
            "unlocked_techs": sorted(self.unlocked_techs),
            "public_unlocked": sorted(self.public_unlocked),
            "published_techs": sorted(self.published_techs),
            "research_progress": dict(self.research_progress),
            "dev_progress": dict(self.dev_progress),
            "developed_products": sorted(self.developed_products),
            "deployed_products": sorted(self.deployed_products),
            "project_visibility": dict(self.project_visibility),
        }

    def public_view(self) -> dict:
        """What other orgs may see: public footprint only, no finances or pools."""
        return {
            "id": self.id,
            "influence": self.influence,
            "deployed_products": sorted(self.deployed_products),
            "published_techs": sorted(self.published_techs),
            "unlocked_techs": sorted(self.public_unlocked),
            "projects": [p for p in self.projects() if p["visibility"] == "public"],
        }


@dataclass
class WorldState:
    turn: int
    year: int
    phase: Phase
    chaos: int
    free_talent: int
    orgs: dict[str, OrganizationState]
    narrative: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "turn": self.turn,
            "year": self.year,
            "phase": self.phase.value,
            "chaos": self.chaos,
            "free_talent": self.free_talent,
            "orgs": {k: v.to_dict() for k, v in self.orgs.items()},
            "narrative": list(self.narrative),
        }


@dataclass
class ResolutionReport:
    """The world update: a public bulletin plus per-org private outcomes."""

    turn: int
    public_bulletin: list[str]
    public_events: list[dict]
    private_reports: dict[str, list[dict]]

    def to_dict(self) -> dict:
        return {"turn": self.turn, "public_bulletin": self.public_bulletin,
                "public_events": self.public_events, "private_reports": self.private_reports}


@dataclass
class DebriefReport:
    """End-of-game reveal: unredacted log, hidden projects, per-role scores."""

    scores: dict[str, dict]
    private_projects: dict[str, list[dict]]
    event_log: list[dict]
    final_world: dict

    def to_dict(self) -> dict:
        return {"scores": self.scores, "private_projects": self.private_projects,
                "event_log": self.event_log, "final_world": self.final_world}


@dataclass
class FilteredView:
    """Everything one role may legally see; a pure function of (log, role)."""

    role: str
    organization: str | None
    turn: int
    year: int
    phase: str
    chaos: int
    free_talent: int
    you: dict | None
    orgs: dict[str, dict]
    bulletin: list[str]
    events: list[dict]
    unruled_free_text: list[dict] | None = None  # facilitator only

    def to_dict(self) -> dict:
        data = {
            "role": self.role,
            "organization": self.organization,
            "turn": self.turn,
            "year": self.year,
            "phase": self.phase,
            "chaos": self.chaos,
            "free_talent": self.free_talent,
            "you": self.you,
            "orgs": self.orgs,
            "bulletin": self.bulletin,
            "events": self.events,
        }
        if self.unruled_free_text is not None:
            data["unruled_free_text"] = self.unruled_free_text
        return data


_RESOLUTION_STEPS = ("rulings", "deployment", "research", "development", "publish",
                     "espionage", "talent_market", "economy", "chaos", "world_events", "clock")


class Game:
    """One running game. Construct via `new_game` or `replay`."""

    def __init__(self):
        self.scenario: Scenario | None = None
        self.seed: int = 0
        self.assignments: dict[str, str] = {}
        self.world: WorldState | None = None
        self.events: list[GameEvent] = []
        self.pending: dict[str, list[Order]] = {}
        self.rulings: dict[str, dict] = {}
        self.queued_events: list[dict] = []
        self.cursor: dict[str, int] = {}
        self.next_seq: int = 0

    # Construction / replay -------------------------------------------------

    @classmethod
    def new_game(cls, scenario: Scenario, seed: int, assignments: dict[str, str]) -> "Game":
        violations = validate_scenario(scenario)
        if violations:
            raise InvalidScenario(violations)
        role_ids = {r.id for r in scenario.roles}
        missing = sorted(role_ids - set(assignments))
        extra = sorted(set(assignments) - role_ids)
        if missing or extra:
            raise IncompleteAssignment(f"missing roles {missing}, unknown roles {extra}")
        for role_id, player in assignments.items():
            if not isinstance(player, str) or not player:
                raise IncompleteAssignment(f"role {role_id!r} has no player")
        game = cls()
        game._emit(ev.GAME_CREATED, ev.FACILITATOR,
                   {"scenario": scenario.to_dict(), "seed": seed,
                    "assignments": dict(sorted(assignments.items()))},
                   Visibility.public())
        return game

    @classmethod
    def replay(cls, event_records: list[GameEvent | dict]) -> "Game":
        """Fold a log back into a live game; the digest matches the original."""
        if not event_records:
            raise CorruptLog("empty event log")
        game = cls()
        for i, record in enumerate(event_records):
            event = record if isinstance(record, GameEvent) else GameEvent.from_dict(record)
            if event.seq != i:
                raise CorruptLog(f"sequence gap: expected seq {i}, got {event.seq}")
            if i == 0 and event.kind != ev.GAME_CREATED:
                raise CorruptLog(f"log must begin with {ev.GAME_CREATED}, got {event.kind}")
            if i > 0 and event.kind == ev.GAME_CREATED:
                raise CorruptLog("duplicate game_created event")
            game.events.append(event)
            game.next_seq = i + 1
            try:
                game._apply(event)
            except CorruptLog:
                raise
            except Exception as exc:  # malformed payload for a known kind
                raise CorruptLog(f"event seq {i} ({event.kind}) failed to apply: {exc}") from exc
        return game

    # Event plumbing ---------------------------------------------------------

    def _emit(self, kind: str, actor: str, payload: dict, visibility: Visibility) -> GameEvent:
        event = GameEvent(
            seq=self.next_seq,
            turn=self.world.turn if self.world else 0,
            phase=self.world.phase.value if self.world else Phase.NEGOTIATION.value,
            kind=kind,
            actor=actor,
            payload=payload,
            visibility=visibility,
        )
        self.events.append(event)
        self.next_seq += 1
        self._apply(event)
        return event

    def _org_state(self, org_id: str) -> OrganizationState:
        return self.world.orgs[org_id]

    def _role_org(self, role_id: str) -> str:
        role = self.scenario.role(role_id)
        if role is None:
            raise UnknownRole(f"unknown role {role_id!r}")
        return role.organization

    # Fold -------------------------------------------------------------------

    def _apply(self, event: GameEvent) -> None:
        handler = getattr(self, "_apply_" + event.kind, None)
        if handler is None:
            raise CorruptLog(f"unknown event kind {event.kind!r}")
        handler(event.payload)

    def _apply_game_created(self, p: dict) -> None:
        scenario = Scenario.from_dict(p["scenario"])
        self.scenario = scenario
        self.seed = p["seed"]
        self.assignments = dict(p["assignments"])
        orgs = {
            spec.id: OrganizationState(id=spec.id, talent_pool=spec.initial_talent,
                                       funds=spec.initial_funds)
            for spec in scenario.organizations
        }
        self.world = WorldState(
            turn=0,
            year=scenario.start_year,
            phase=Phase.NEGOTIATION,
            chaos=scenario.chaos_rules.initial,
            free_talent=scenario.market.initial_free_talent,
            orgs=orgs,
        )

    def _apply_message(self, p: dict) -> None:
        pass  # messages live in the log only

    def _apply_orders_submitted(self, p: dict) -> None:
        role, tag = p["role"], p["phase_tag"]
        kept = [o for o in self.pending.get(role, []) if o.phase_tag != tag]
        new = [Order.from_dict(d) for d in p["orders"]]
        self.pending[role] = kept + new
        stale = f"{self.world.turn}:{role}:{tag}:"
        for ref in [r for r in self.rulings if r.startswith(stale)]:
            del self.rulings[ref]

    def _apply_phase_advanced(self, p: dict) -> None:
        self.world.phase = Phase(p["phase"])

    def _apply_free_text_ruled(self, p: dict) -> None:
        self.rulings[p["order_ref"]] = p

    def _apply_world_event_queued(self, p: dict) -> None:
        self.queued_events.append(p["event"])

    def _apply_ruling_applied(self, p: dict) -> None:
        org = self._org_state(p["org"])
        applied = p["applied"]
        org.funds += applied["funds"]
        org.talent_pool += applied["talent"]
        org.influence += applied["influence"]

    def _apply_product_deployed(self, p: dict) -> None:
        self._org_state(p["org"]).deployed_products.add(p["product"])

    def _apply_product_withdrawn(self, p: dict) -> None:
        self._org_state(p["org"]).deployed_products.discard(p["product"])

    def _apply_regulation_enacted(self, p: dict) -> None:
        self._org_state(p["org"]).influence += p["influence_delta"]

    def _record_dice(self, p: dict) -> None:
        self.cursor[p["stream"]] = self.cursor.get(p["stream"], 0) + len(p["dice"])

    def _apply_research_resolved(self, p: dict) -> None:
        self._record_dice(p)
        org = self._org_state(p["org"])
        org.research_progress[p["tech"]] = p["progress"]
        org.project_visibility["research:" + p["tech"]] = p["visibility"]

    def _apply_development_resolved(self, p: dict) -> None:
        self._record_dice(p)
        org = self._org_state(p["org"])
        org.dev_progress[p["product"]] = p["progress"]
        org.project_visibility["development:" + p["product"]] = p["visibility"]

    def _apply_tech_unlocked(self, p: dict) -> None:
        org = self._org_state(p["org"])
        org.unlocked_techs.add(p["tech"])
        if p["public"]:
            org.public_unlocked.add(p["tech"])

    def _apply_product_developed(self, p: dict) -> None:
        self._org_state(p["org"]).developed_products.add(p["product"])

    def _apply_tech_published(self, p: dict) -> None:
        org = self._org_state(p["org"])
        org.published_techs.add(p["tech"])
        org.public_unlocked.add(p["tech"])
        org.project_visibility["research:" + p["tech"]] = "public"

    def _apply_espionage_resolved(self, p: dict) -> None:
        self._record_dice(p)

    def _apply_espionage_exposed(self, p: dict) -> None:
        pass  # chaos lands in the chaos step

    def _apply_talent_poached(self, p: dict) -> None:
        moved = p["transferred"]
        self._org_state(p["target"]).talent_pool -= moved
        org = self._org_state(p["org"])
        org.talent_pool += moved
        org.funds -= p["funds_spent"]

    def _apply_talent_attracted(self, p: dict) -> None:
        applied = p["applied"]
        self._org_state(p["org"]).talent_pool += applied
        self.world.free_talent -= applied

    def _apply_revenue_collected(self, p: dict) -> None:
        self._org_state(p["org"]).funds += p["amount"]

    def _apply_economy_effect(self, p: dict) -> None:
        org = self._org_state(p["scope_org"])
        if p["target"] == "org_funds":
            org.funds += p["delta"]
        else:
            org.influence += p["delta"]

    def _apply_tax_collected(self, p: dict) -> None:
        self._org_state(p["target"]).funds -= p["amount"]
        self._org_state(p["org"]).funds += p["amount"]

    def _apply_lobby_resolved(self, p: dict) -> None:
        org = self._org_state(p["org"])
        org.funds -= p["funds"]
        org.influence += p["influence_gained"]
        self._org_state(p["target"]).funds += p["funds"]

    def _apply_safety_investment_resolved(self, p: dict) -> None:
        pass  # chaos lands in the chaos step

    def _apply_chaos_updated(self, p: dict) -> None:
        self.world.chaos = p["after"]

    def _apply_world_event_triggered(self, p: dict) -> None:
        spec = p["event"]
        self.world.chaos = _clamp(self.world.chaos + spec.get("chaos_delta", 0), 0, 100)
        for eff in spec.get("effects", []):
            if eff["target"] == "world_chaos":
                self.world.chaos = _clamp(self.world.chaos + eff["delta"], 0, 100)
                continue
            org = self.world.orgs.get(eff["scope"])
            if org is None:
                continue
            if eff["target"] == "org_funds":
                org.funds += eff["delta"]
            elif eff["target"] == "org_influence":
                org.influence += eff["delta"]
            elif eff["target"] == "org_talent_attraction":
                moved = min(eff["delta"], self.world.free_talent) if eff["delta"] > 0 \
                    else -min(-eff["delta"], org.talent_pool)
                org.talent_pool += moved
                self.world.free_talent -= moved

    def _apply_turn_resolved(self, p: dict) -> None:
        self.world.turn = p["turn"]
        self.world.year = p["year"]
        self.world.narrative.extend(p["headlines"])
        self.pending.clear()
        self.rulings.clear()
        self.queued_events.clear()

    def _apply_game_finished(self, p: dict) -> None:
        self.world.phase = Phase.FINISHED

    # Commands ----------------------------------------------------------------

    def submit_message(self, from_role: str, to_roles: list[str], text: str) -> GameEvent:
        if self.world.phase is not Phase.NEGOTIATION:
            raise WrongPhase(f"messages are negotiation-phase only, phase is {self.world.phase.value}")
        self._role_org(from_role)
        for r in to_roles:
            self._role_org(r)
        if not to_roles:
            raise UnknownRole("message needs at least one recipient")
        return self._emit(ev.MESSAGE, from_role,
                          {"from": from_role, "to": sorted(set(to_roles)), "text": text},
                          Visibility.private_to_roles([from_role, *to_roles]))

    def submit_orders(self, role_id: str, orders: list[Order]) -> GameEvent:
        phase = self.world.phase
        if phase is Phase.PRIVATE_ACTIONS:
            tag = "private"
        elif phase is Phase.PUBLIC_ACTIONS:
            tag = "public"
        else:
            raise WrongPhase(f"orders may not be submitted during {phase.value}")
        role = self.scenario.role(role_id)
        if role is None:
            raise UnknownRole(f"unknown role {role_id!r}")
        org = self._org_state(role.organization)
        for order in orders:
            if order.issuing_role != role_id:
                raise NotEntitled(f"order issued for {order.issuing_role!r} by {role_id!r}")
            if order.phase_tag != tag:
                raise WrongPhase(f"{order.kind.value} tagged {order.phase_tag} in {phase.value}")
            if order.kind not in role.entitlements:
                raise NotEntitled(f"role {role_id!r} may not submit {order.kind.value}")
            self._check_order_target(org, order)
        self._check_resources(role, org, orders, tag)
        visibility = Visibility.public() if tag == "public" else Visibility.private_to_org(org.id)
        return self._emit(ev.ORDERS_SUBMITTED, role_id,
                          {"role": role_id, "phase_tag": tag, "orders": [o.to_dict() for o in orders]},
                          visibility)

    def _check_order_target(self, org: OrganizationState, order: Order) -> None:
        s = self.scenario
        kind = order.kind
        if kind in (OrderKind.ALLOCATE_RESEARCH, OrderKind.COLLABORATE):
            node = s.tech(order.tech)
            if node is None:
                raise UnknownTarget(f"unknown tech {order.tech!r}")
            locked = [p for p in node.prerequisites if p not in org.unlocked_techs]
            if locked:
                raise PrerequisiteLocked(f"tech {node.id!r} needs {locked} unlocked first")
            if order.talent_cost() < 0:
                raise InsufficientTalent("talent allocation cannot be negative")
        if kind is OrderKind.ALLOCATE_DEVELOPMENT:
            card = s.product(order.product)
            if card is None:
                raise UnknownTarget(f"unknown product {order.product!r}")
            if card.required_tech not in org.unlocked_techs:
                raise PrerequisiteLocked(f"product {card.id!r} needs tech {card.required_tech!r}")
            if order.talent_cost() < 0:
                raise InsufficientTalent("talent allocation cannot be negative")
        if kind is OrderKind.DEPLOY_PRODUCT:
            if s.product(order.product) is None:
                raise UnknownTarget(f"unknown product {order.product!r}")
            if order.product not in org.developed_products:
                raise PrerequisiteLocked(f"product {order.product!r} is not developed")
        if kind is OrderKind.WITHDRAW_PRODUCT:
            if s.product(order.product) is None:
                raise UnknownTarget(f"unknown product {order.product!r}")
            if order.product not in org.deployed_products:
                raise PrerequisiteLocked(f"product {order.product!r} is not deployed")
        if kind is OrderKind.PUBLISH:
            if s.tech(order.tech) is None:
                raise UnknownTarget(f"unknown tech {order.tech!r}")
            if order.tech not in org.unlocked_techs:
                raise PrerequisiteLocked(f"cannot publish locked tech {order.tech!r}")
        if kind in (OrderKind.ESPIONAGE, OrderKind.POACH_TALENT, OrderKind.TAX, OrderKind.LOBBY):
            if order.target_org not in self.world.orgs:
                raise UnknownTarget(f"unknown org {order.target_org!r}")
            if kind in (OrderKind.ESPIONAGE, OrderKind.POACH_TALENT) and order.target_org == org.id:
                raise UnknownTarget(f"{kind.value} cannot target its own org")
            if kind is OrderKind.ESPIONAGE and order.talent_cost() < 1:
                raise InsufficientTalent("espionage needs at least 1 talent")
            if kind is OrderKind.POACH_TALENT and (order.amount < 0 or order.funds_offered < 0):
                raise InsufficientFunds("poach amount and funds_offered must be >= 0")
            if kind is OrderKind.LOBBY and order.funds < 0:
                raise InsufficientFunds("lobby funds must be >= 0")
        if kind is OrderKind.COLLABORATE:
            if order.partner_org not in self.world.orgs:
                raise UnknownTarget(f"unknown org {order.partner_org!r}")
            if order.partner_org == org.id:
                raise UnknownTarget("collaboration needs a distinct partner org")
        if kind is OrderKind.REGULATE and order.category not in PRODUCT_CATEGORIES:
            raise UnknownTarget(f"unknown product category {order.category!r}")
        if kind is OrderKind.SAFETY_INVESTMENT and order.talent_cost() < 0:
            raise InsufficientTalent("talent allocation cannot be negative")

    def _check_resources(self, role, org: OrganizationState, orders: list[Order], tag: str) -> None:
        committed_talent = committed_funds = 0
        for other_role in self.scenario.org_roles(org.id):
            for o in self.pending.get(other_role.id, []):
                if other_role.id == role.id and o.phase_tag == tag:
                    continue  # being replaced by this submission
                committed_talent += o.talent_cost()
                committed_funds += o.funds_cost()
        new_talent = sum(o.talent_cost() for o in orders)
        new_funds = sum(o.funds_cost() for o in orders)
        if committed_talent + new_talent > org.talent_pool:
            raise InsufficientTalent(
                f"org {org.id!r} talent over-committed: {committed_talent}+{new_talent} > {org.talent_pool}")
        if committed_funds + new_funds > org.funds:
            raise InsufficientFunds(
                f"org {org.id!r} funds over-committed: {committed_funds}+{new_funds} > {org.funds}")

    def advance_phase(self) -> ResolutionReport | None:
        """Step the fixed phase cycle; entering WorldUpdate resolves the turn."""
        phase = self.world.phase
        if phase is Phase.NEGOTIATION:
            self._emit(ev.PHASE_ADVANCED, ev.FACILITATOR,
                       {"phase": Phase.PRIVATE_ACTIONS.value}, Visibility.public())
            return None
        if phase is Phase.PRIVATE_ACTIONS:
            self._emit(ev.PHASE_ADVANCED, ev.FACILITATOR,
                       {"phase": Phase.PUBLIC_ACTIONS.value}, Visibility.public())
            return None
        if phase is Phase.PUBLIC_ACTIONS:
            unruled = self.unruled_free_text()
            if unruled:
                raise UnruledFreeText([u["order_ref"] for u in unruled])
            self._emit(ev.PHASE_ADVANCED, ev.FACILITATOR,
                       {"phase": Phase.WORLD_UPDATE.value}, Visibility.public())
            return self.resolve_turn()
        raise WrongPhase(f"cannot advance from {phase.value}")

    def unruled_free_text(self) -> list[dict]:
        out = []
        for role_id in sorted(self.pending):
            for i, order in enumerate(self.pending[role_id]):
                if order.kind is OrderKind.FREE_TEXT:
                    ref = self._order_ref(role_id, order.phase_tag, i)
                    if ref not in self.rulings:
                        out.append({"order_ref": ref, "order": order.to_dict()})
        return out

    def _order_ref(self, role_id: str, tag: str, index: int) -> str:
        # index is the order's position in the role's full pending list
        return f"{self.world.turn}:{role_id}:{tag}:{index}"

    def facilitator_rule(self, order_ref: str, narrative: str, deltas: dict | None = None,
                         headlines: list[str] | None = None) -> GameEvent:
        """Bind mechanical deltas to a free-text order; applied at next resolution."""
        deltas = dict(deltas or {})
        order = self._find_free_text(order_ref)
        if order is None:
            raise UnknownOrder(f"no pending free-text order {order_ref!r}")
        if order_ref in self.rulings:
            raise AlreadyRuled(f"order {order_ref!r} already has a ruling")
        clean = {
            "funds": int(deltas.pop("funds", 0)),
            "talent": int(deltas.pop("talent", 0)),
            "influence": int(deltas.pop("influence", 0)),
            "chaos": int(deltas.pop("chaos", 0)),
            "grant_techs": list(deltas.pop("grant_techs", [])),
        }
        if deltas:
            raise UnknownTarget(f"unknown ruling delta fields {sorted(deltas)}")
        org = self._org_state(self._role_org(order.issuing_role))
        granted = set(org.unlocked_techs)
        for tech_id in clean["grant_techs"]:
            node = self.scenario.tech(tech_id)
            if node is None:
                raise UnknownTarget(f"cannot grant unknown tech {tech_id!r}")
            locked = [p for p in node.prerequisites if p not in granted]
            if locked:
                raise PrerequisiteLocked(f"grant of {tech_id!r} needs {locked} unlocked")
            granted.add(tech_id)
        return self._emit(ev.FREE_TEXT_RULED, ev.FACILITATOR,
                          {"order_ref": order_ref, "order": order.to_dict(),
                           "narrative": narrative, "deltas": clean,
                           "headlines": list(headlines or [])},
                          Visibility.facilitator_only())

    def _find_free_text(self, order_ref: str) -> Order | None:
        for item in [u for role_id in sorted(self.pending)
                     for u in self._refs_for(role_id)]:
            if item[0] == order_ref:
                return item[1]
        return None

    def _refs_for(self, role_id: str) -> list[tuple[str, Order]]:
        return [(self._order_ref(role_id, o.phase_tag, i), o)
                for i, o in enumerate(self.pending.get(role_id, []))
                if o.kind is OrderKind.FREE_TEXT]

    def inject_world_event(self, name: str, narrative: str, chaos_delta: int = 0,
                           effects: list[dict] | None = None) -> GameEvent:
        """Queue a facilitator world event for the next resolution."""
        if self.world.phase in (Phase.DEBRIEF, Phase.FINISHED):
            raise WrongPhase("cannot inject events after the final turn")
        spec = {
            "id": f"injected:{self.next_seq}",
            "name": name,
            "threshold": None,
            "narrative": narrative,
            "chaos_delta": int(chaos_delta),
            "effects": [dict(e) for e in (effects or [])],
        }
        return self._emit(ev.WORLD_EVENT_QUEUED, ev.FACILITATOR, {"event": spec},
                          Visibility.facilitator_only())

    # Turn resolution ----------------------------------------------------------

    def resolve_turn(self) -> ResolutionReport:
        if self.world.phase is not Phase.WORLD_UPDATE:
            raise WrongPhase(f"resolution requires world_update phase, got {self.world.phase.value}")
        unruled = self.unruled_free_text()
        if unruled:
            raise UnruledFreeText([u["order_ref"] for u in unruled])

        first_new = len(self.events)
        turn = self.world.turn
        chaos_before = self.world.chaos
        ctx = {"order_chaos": 0, "facilitator_chaos": 0}

        gathered = self._gather_orders()
        self._step_rulings(ctx)
        self._step_deployment(gathered)
        self._step_research(turn, gathered)
        self._step_development(turn, gathered)
        self._step_publish(gathered)
        self._step_espionage(turn, gathered, ctx)
        self._step_talent_market(gathered)
        self._step_economy(gathered, ctx)
        self._step_chaos(gathered, ctx)
        self._step_world_events(chaos_before)
        report = self._step_clock(first_new, turn)
        return report

    def _gather_orders(self) -> dict[OrderKind, list[tuple[str, Order]]]:
        """All pending orders keyed by kind, each list in canonical order."""
        out: dict[OrderKind, list[tuple[str, Order]]] = {k: [] for k in OrderKind}
        rows = []
        for role_id in self.pending:
            org_id = self._role_org(role_id)
            for i, order in enumerate(self.pending[role_id]):
                rows.append(((org_id, order.kind.value, order.target_id(), role_id, i), org_id, order))
        rows.sort(key=lambda r: r[0])
        for _, org_id, order in rows:
            out[order.kind].append((org_id, order))
        return out

    def _step_rulings(self, ctx: dict) -> None:
        for ref in sorted(self.rulings):
            ruling = self.rulings[ref]
            order = Order.from_dict(ruling["order"])
            org = self._org_state(self._role_org(order.issuing_role))
            deltas = ruling["deltas"]
            ctx["facilitator_chaos"] += deltas["chaos"]
            applied = {
                "funds": deltas["funds"],
                "talent": max(deltas["talent"], -org.talent_pool),  # pools never go negative
                "influence": deltas["influence"],
            }
            visibility = Visibility.public() if order.phase_tag == "public" \
                else Visibility.private_to_org(org.id)
            self._emit(ev.RULING_APPLIED, ev.FACILITATOR,
                       {"order_ref": ref, "org": org.id, "narrative": ruling["narrative"],
                        "applied": applied, "headlines": ruling["headlines"]},
                       visibility)
            granted = []
            for tech_id in deltas["grant_techs"]:
                if tech_id not in org.unlocked_techs:
                    granted.append(tech_id)
                    self._emit(ev.TECH_UNLOCKED, ev.FACILITATOR,
                               {"org": org.id, "tech": tech_id, "via": "ruling",
                                "public": order.phase_tag == "public"},
                               visibility)

    def _step_deployment(self, gathered: dict) -> None:
        for org_id, order in gathered[OrderKind.DEPLOY_PRODUCT]:
            org = self._org_state(org_id)
            if order.product in org.developed_products and order.product not in org.deployed_products:
                self._emit(ev.PRODUCT_DEPLOYED, order.issuing_role,
                           {"org": org_id, "product": order.product,
                            "category": self.scenario.product(order.product).category},
                           Visibility.public())
        for org_id, order in gathered[OrderKind.WITHDRAW_PRODUCT]:
            if order.product in self._org_state(org_id).deployed_products:
                self._emit(ev.PRODUCT_WITHDRAWN, order.issuing_role,
                           {"org": org_id, "product": order.product, "regulation": False},
                           Visibility.public())
        for org_id, order in gathered[OrderKind.REGULATE]:
            withdrawn = []
            for other_id in sorted(self.world.orgs):
                other = self._org_state(other_id)
                for product_id in sorted(other.deployed_products):
                    if self.scenario.product(product_id).category == order.category:
                        withdrawn.append({"org": other_id, "product": product_id})
            for item in withdrawn:
                self._emit(ev.PRODUCT_WITHDRAWN, order.issuing_role,
                           {"org": item["org"], "product": item["product"], "regulation": True},
                           Visibility.public())
            self._emit(ev.REGULATION_ENACTED, order.issuing_role,
                       {"org": org_id, "category": order.category, "withdrawn": withdrawn,
                        "influence_delta": 1},
                       Visibility.public())

    def _effective_cost(self, org: OrganizationState, tech_id: str) -> int:
        node = self.scenario.tech(tech_id)
        published_elsewhere = any(tech_id in other.published_techs
                                  for other in self.world.orgs.values() if other.id != org.id)
        if published_elsewhere:
            return max(1, node.research_cost - node.publish_discount)
        return node.research_cost

    def _project_visibility(self, org: OrganizationState, key: str, new_tags: list[str]) -> str:
        if org.project_visibility.get(key) == "public" or "public" in new_tags:
            return "public"
        return "private"

    def _roll(self, turn: int, step: str, actor: str, n: int) -> tuple[str, list[int], int]:
        key = rng.stream_key(self.seed, turn, step, actor)
        start = self.cursor.get(key, 0)
        dice = rng.roll_dice(key, start, n, self.scenario.dice.sides)
        successes = sum(1 for d in dice if d >= self.scenario.dice.success_threshold)
        return key, dice, successes

    def _maybe_unlock(self, org: OrganizationState, tech_id: str, public: bool, via: str) -> None:
        if tech_id in org.unlocked_techs:
            return
        if org.research_progress.get(tech_id, 0) >= self._effective_cost(org, tech_id):
            visibility = Visibility.public() if public else Visibility.private_to_org(org.id)
            self._emit(ev.TECH_UNLOCKED, ev.WORLD,
                       {"org": org.id, "tech": tech_id, "via": via, "public": public},
                       visibility)

    def _step_research(self, turn: int, gathered: dict) -> None:
        # Solo allocations pool per (org, tech); matched collaborations pool across orgs.
        solo: dict[tuple[str, str], dict] = {}
        for org_id, order in gathered[OrderKind.ALLOCATE_RESEARCH]:
            slot = solo.setdefault((org_id, order.tech), {"talent": 0, "tags": []})
            slot["talent"] += order.talent_cost()
            slot["tags"].append(order.visibility or order.phase_tag)

        collab: dict[tuple[str, str, str], dict] = {}
        for org_id, order in gathered[OrderKind.COLLABORATE]:
            pair = tuple(sorted((org_id, order.partner_org)))
            slot = collab.setdefault((pair[0], pair[1], order.tech),
                                     {pair[0]: {"talent": 0, "tags": []},
                                      pair[1]: {"talent": 0, "tags": []}})
            slot[org_id]["talent"] += order.talent_cost()
            slot[org_id]["tags"].append(order.phase_tag)

        for (a, b, tech_id), sides in sorted(collab.items()):
            if sides[a]["talent"] > 0 and sides[b]["talent"] > 0:
                self._resolve_collab(turn, a, b, tech_id, sides)
            else:
                # unmatched offer falls back to solo research
                active = a if sides[a]["talent"] > 0 else b
                slot = solo.setdefault((active, tech_id), {"talent": 0, "tags": []})
                slot["talent"] += sides[active]["talent"]
                slot["tags"].extend(sides[active]["tags"])

        for (org_id, tech_id), slot in sorted(solo.items()):
            org = self._org_state(org_id)
            key, dice, successes = self._roll(turn, "research", f"{org_id}/{tech_id}", slot["talent"])
            progress = org.research_progress.get(tech_id, 0) + successes
            visibility_tag = self._project_visibility(org, "research:" + tech_id, slot["tags"])
            event_vis = Visibility.public() if visibility_tag == "public" \
                else Visibility.private_to_org(org_id)
            self._emit(ev.RESEARCH_RESOLVED, ev.WORLD,
                       {"org": org_id, "tech": tech_id, "talent": slot["talent"], "stream": key,
                        "dice": dice, "successes": successes, "progress": progress,
                        "threshold": self._effective_cost(org, tech_id),
                        "visibility": visibility_tag},
                       event_vis)
            self._maybe_unlock(org, tech_id, visibility_tag == "public", "research")

    def _resolve_collab(self, turn: int, a: str, b: str, tech_id: str, sides: dict) -> None:
        pooled = sides[a]["talent"] + sides[b]["talent"]
        key, dice, successes = self._roll(turn, "research", f"{a}+{b}/{tech_id}", pooled)
        for org_id, partner in ((a, b), (b, a)):
            org = self._org_state(org_id)
            progress = org.research_progress.get(tech_id, 0) + successes
            visibility_tag = self._project_visibility(org, "research:" + tech_id, sides[org_id]["tags"])
            event_vis = Visibility.public() if visibility_tag == "public" \
                else Visibility.private_to_org(org_id)
            self._emit(ev.RESEARCH_RESOLVED, ev.WORLD,
                       {"org": org_id, "tech": tech_id, "talent": sides[org_id]["talent"],
                        "partner": partner, "pooled_talent": pooled, "stream": key,
                        "dice": dice if org_id == a else [], "successes": successes,
                        "progress": progress, "threshold": self._effective_cost(org, tech_id),
                        "visibility": visibility_tag},
                       event_vis)
            self._maybe_unlock(org, tech_id, visibility_tag == "public", "collaboration")

    def _step_development(self, turn: int, gathered: dict) -> None:
        pooled: dict[tuple[str, str], dict] = {}
        for org_id, order in gathered[OrderKind.ALLOCATE_DEVELOPMENT]:
            slot = pooled.setdefault((org_id, order.product), {"talent": 0, "tags": []})
            slot["talent"] += order.talent_cost()
            slot["tags"].append(order.visibility or order.phase_tag)
        for (org_id, product_id), slot in sorted(pooled.items()):
            org = self._org_state(org_id)
            card = self.scenario.product(product_id)
            key, dice, successes = self._roll(turn, "development", f"{org_id}/{product_id}",
                                              slot["talent"])
            progress = org.dev_progress.get(product_id, 0) + successes
            visibility_tag = self._project_visibility(org, "development:" + product_id, slot["tags"])
            event_vis = Visibility.public() if visibility_tag == "public" \
                else Visibility.private_to_org(org_id)
            self._emit(ev.DEVELOPMENT_RESOLVED, ev.WORLD,
                       {"org": org_id, "product": product_id, "talent": slot["talent"],
                        "stream": key, "dice": dice, "successes": successes,
                        "progress": progress, "threshold": card.dev_cost,
                        "visibility": visibility_tag},
                       event_vis)
            if product_id not in org.developed_products and progress >= card.dev_cost:
                self._emit(ev.PRODUCT_DEVELOPED, ev.WORLD,
                           {"org": org_id, "product": product_id,
                            "public": visibility_tag == "public"},
                           event_vis)

    def _step_publish(self, gathered: dict) -> None:
        for org_id, order in gathered[OrderKind.PUBLISH]:
            org = self._org_state(org_id)
            if order.tech in org.published_techs:
                continue
            self._emit(ev.TECH_PUBLISHED, order.issuing_role,
                       {"org": org_id, "tech": order.tech,
                        "name": self.scenario.tech(order.tech).name},
                       Visibility.public())
            # a fresh discount can put other orgs over the line without new dice
            for other_id in sorted(self.world.orgs):
                if other_id == org_id:
                    continue
                other = self._org_state(other_id)
                if order.tech in other.research_progress:
                    public = other.project_visibility.get("research:" + order.tech) == "public"
                    self._maybe_unlock(other, order.tech, public, "publish_discount")

    def _step_espionage(self, turn: int, gathered: dict, ctx: dict) -> None:
        pooled: dict[tuple[str, str], int] = {}
        for org_id, order in gathered[OrderKind.ESPIONAGE]:
            pair = (org_id, order.target_org)
            pooled[pair] = pooled.get(pair, 0) + order.talent_cost()
        for (attacker_id, target_id), talent in sorted(pooled.items()):
            key, dice, successes = self._roll(turn, "espionage", f"{attacker_id}->{target_id}", talent)
            target = self._org_state(target_id)
            findings = target.private_projects() if successes >= 1 else []
            self._emit(ev.ESPIONAGE_RESOLVED, ev.WORLD,
                       {"org": attacker_id, "target": target_id, "talent": talent, "stream": key,
                        "dice": dice, "successes": successes, "findings": findings},
                       Visibility.private_to_org(attacker_id))
            if dice and all(d == 1 for d in dice):
                ctx["order_chaos"] += self.scenario.chaos_rules.exposed_espionage
                self._emit(ev.ESPIONAGE_EXPOSED, ev.WORLD,
                           {"org": attacker_id, "target": target_id,
                            "chaos_delta": self.scenario.chaos_rules.exposed_espionage},
                           Visibility.public())

    def _step_talent_market(self, gathered: dict) -> None:
        cost = self.scenario.market.cost_per_talent
        for org_id, order in gathered[OrderKind.POACH_TALENT]:
            target = self._org_state(order.target_org)
            moved = min(order.amount, order.funds_offered // cost, target.talent_pool)
            moved = max(0, moved)
            self._emit(ev.TALENT_POACHED, order.issuing_role,
                       {"org": org_id, "target": order.target_org, "requested": order.amount,
                        "transferred": moved, "funds_spent": moved * cost},
                       Visibility.public())
        attraction: dict[str, int] = {}
        for owner_id in sorted(self.world.orgs):
            owner = self._org_state(owner_id)
            for product_id in sorted(owner.deployed_products):
                for eff in self.scenario.product(product_id).effects:
                    if eff.target == "org_talent_attraction":
                        scope = owner_id if eff.scope == "owner" else eff.scope
                        attraction[scope] = attraction.get(scope, 0) + eff.delta
        for org_id in sorted(attraction):
            delta = attraction[org_id]
            org = self._org_state(org_id)
            applied = min(delta, self.world.free_talent) if delta > 0 \
                else -min(-delta, org.talent_pool)
            if applied == 0:
                continue
            self._emit(ev.TALENT_ATTRACTED, ev.WORLD,
                       {"org": org_id, "delta": delta, "applied": applied},
                       Visibility.public())

    def _step_economy(self, gathered: dict, ctx: dict) -> None:
        for org_id in sorted(self.world.orgs):
            org = self._org_state(org_id)
            deployed = sorted(org.deployed_products)
            amount = sum(self.scenario.product(p).revenue for p in deployed)
            if amount:
                self._emit(ev.REVENUE_COLLECTED, ev.WORLD,
                           {"org": org_id, "amount": amount, "products": deployed},
                           Visibility.private_to_org(org_id))
        for owner_id in sorted(self.world.orgs):
            owner = self._org_state(owner_id)
            for product_id in sorted(owner.deployed_products):
                for eff in self.scenario.product(product_id).effects:
                    scope = owner_id if eff.scope == "owner" else eff.scope
                    if eff.target in ("org_funds", "org_influence") and scope in self.world.orgs:
                        self._emit(ev.ECONOMY_EFFECT, ev.WORLD,
                                   {"product": product_id, "owner": owner_id, "target": eff.target,
                                    "scope_org": scope, "delta": eff.delta},
                                   Visibility.private_to_org(scope))
        for org_id, order in gathered[OrderKind.TAX]:
            target = self._org_state(order.target_org)
            rate = _clamp(order.rate_percent, 0, 100)
            amount = max(0, target.funds) * rate // 100
            self._emit(ev.TAX_COLLECTED, order.issuing_role,
                       {"org": org_id, "target": order.target_org, "rate": rate, "amount": amount},
                       Visibility.public())
        lobby_rate = self.scenario.market.lobby_funds_per_influence
        for org_id, order in gathered[OrderKind.LOBBY]:
            self._emit(ev.LOBBY_RESOLVED, order.issuing_role,
                       {"org": org_id, "target": order.target_org, "funds": order.funds,
                        "influence_gained": order.funds // lobby_rate},
                       Visibility.public())

    def _step_chaos(self, gathered: dict, ctx: dict) -> None:
        rules = self.scenario.chaos_rules
        for org_id, order in gathered[OrderKind.SAFETY_INVESTMENT]:
            delta = rules.safety_investment_per_talent * order.talent_cost()
            ctx["order_chaos"] += delta
            visibility = Visibility.public() if order.phase_tag == "public" \
                else Visibility.private_to_org(org_id)
            self._emit(ev.SAFETY_INVESTMENT_RESOLVED, order.issuing_role,
                       {"org": org_id, "talent": order.talent_cost(), "chaos_delta": delta},
                       visibility)
        product_chaos = 0
        for org_id in sorted(self.world.orgs):
            for product_id in sorted(self._org_state(org_id).deployed_products):
                card = self.scenario.product(product_id)
                product_chaos += card.chaos_externality
                product_chaos += sum(e.delta for e in card.effects if e.target == "world_chaos")
        after = update_chaos(self.world.chaos, product_chaos, ctx["order_chaos"],
                             ctx["facilitator_chaos"])
        self._emit(ev.CHAOS_UPDATED, ev.WORLD,
                   {"before": self.world.chaos, "after": after,
                    "components": {"products": product_chaos, "orders": ctx["order_chaos"],
                                   "facilitator": ctx["facilitator_chaos"]}},
                   Visibility.public())

    def _step_world_events(self, chaos_before: int) -> None:
        chaos_now = self.world.chaos
        triggered = [e for e in self.scenario.event_table
                     if e.threshold is not None and chaos_before < e.threshold <= chaos_now]
        for spec in sorted(triggered, key=lambda e: (e.threshold, e.id)):
            self._emit(ev.WORLD_EVENT_TRIGGERED, ev.WORLD,
                       {"event": spec.to_dict(), "source": "threshold"},
                       Visibility.public())
        for spec in self.queued_events:
            self._emit(ev.WORLD_EVENT_TRIGGERED, ev.FACILITATOR,
                       {"event": dict(spec), "source": "facilitator"},
                       Visibility.public())

    def _step_clock(self, first_new: int, turn: int) -> ResolutionReport:
        new_events = self.events[first_new:]
        new_turn = turn + 1
        new_year = self.scenario.start_year + new_turn * self.scenario.years_per_turn
        headlines = [f"{new_year}: chaos index at {self.world.chaos}/100."]
        for event in new_events:
            line = self._headline(event)
            if line:
                headlines.append(line)
        for ruling in [self.rulings[ref] for ref in sorted(self.rulings)]:
            headlines.extend(ruling["headlines"])

        self._emit(ev.TURN_RESOLVED, ev.WORLD,
                   {"turn": new_turn, "year": new_year, "headlines": headlines},
                   Visibility.public())
        next_phase = Phase.DEBRIEF if new_turn >= self.scenario.num_turns else Phase.NEGOTIATION
        self._emit(ev.PHASE_ADVANCED, ev.FACILITATOR, {"phase": next_phase.value},
                   Visibility.public())

        all_new = self.events[first_new:]
        public_events = [e.to_dict() for e in all_new if e.visibility.scope == "public"]
        private: dict[str, list[dict]] = {org_id: [] for org_id in self.world.orgs}
        for e in all_new:
            if e.visibility.scope == "org":
                private[e.visibility.org].append(e.to_dict())
        return ResolutionReport(turn=turn, public_bulletin=headlines,
                                public_events=public_events, private_reports=private)

    def _headline(self, event: GameEvent) -> str | None:
        if event.visibility.scope != "public":
            return None
        p = event.payload
        scenario = self.scenario
        if event.kind == ev.TECH_UNLOCKED:
            return f"{self._org_name(p['org'])} unlocks {scenario.tech(p['tech']).name}."
        if event.kind == ev.TECH_PUBLISHED:
            return f"{self._org_name(p['org'])} publishes {scenario.tech(p['tech']).name} openly."
        if event.kind == ev.PRODUCT_DEPLOYED:
            card = scenario.product(p["product"])
            return f"{self._org_name(p['org'])} deploys {card.name} ({card.category})."
        if event.kind == ev.PRODUCT_WITHDRAWN and p.get("regulation"):
            return f"{self._org_name(p['org'])} forced to withdraw {scenario.product(p['product']).name}."
        if event.kind == ev.REGULATION_ENACTED:
            return f"{self._org_name(p['org'])} regulates the {p['category']} sector."
        if event.kind == ev.ESPIONAGE_EXPOSED:
            return (f"Espionage attempt by {self._org_name(p['org'])} against "
                    f"{self._org_name(p['target'])} exposed.")
        if event.kind == ev.TALENT_POACHED and p["transferred"] > 0:
            return (f"{self._org_name(p['org'])} poaches {p['transferred']} talent from "
                    f"{self._org_name(p['target'])}.")
        if event.kind == ev.WORLD_EVENT_TRIGGERED:
            return p["event"]["narrative"]
        if event.kind == ev.RULING_APPLIED:
            return p["narrative"]
        return None

    def _org_name(self, org_id: str) -> str:
        spec = self.scenario.org(org_id)
        return spec.name if spec else org_id

    # Debrief -------------------------------------------------------------------

    def debrief(self) -> DebriefReport:
        if self.world.phase not in (Phase.DEBRIEF, Phase.FINISHED):
            raise WrongPhase(f"debrief requires the game to be over, phase is {self.world.phase.value}")
        scores: dict[str, dict] = {}
        for role in self.scenario.roles:
            org = self._org_state(role.organization)
            metrics = {
                "org_funds": org.funds,
                "org_tech_count": len(org.unlocked_techs),
                "world_stability": 100 - self.world.chaos,
                "org_influence": org.influence,
            }
            terms = [{"metric": g.metric, "weight": g.weight, "value": metrics[g.metric],
                      "points": g.weight * metrics[g.metric]} for g in role.goal]
            scores[role.id] = {"total": sum(t["points"] for t in terms), "terms": terms}
        if self.world.phase is Phase.DEBRIEF:
            self._emit(ev.GAME_FINISHED, ev.FACILITATOR, {"scores": scores}, Visibility.public())
        return DebriefReport(
            scores=scores,
            private_projects={org_id: self._org_state(org_id).private_projects()
                              for org_id in sorted(self.world.orgs)},
            event_log=[e.to_dict() for e in self.events],
            final_world=self.world.to_dict(),
        )

    # Views -----------------------------------------------------------------------

    def player_view(self, role_id: str, include_events: bool = True) -> FilteredView:
        """What one role may see. `include_events=False` skips serializing the
        visible event history (agents only need the summary)."""
        if role_id == ev.FACILITATOR:
            return self._facilitator_view()
        role = self.scenario.role(role_id)
        if role is None:
            raise UnknownRole(f"unknown role {role_id!r}")
        org = self._org_state(role.organization)
        visible = [e for e in self.events if e.visibility.admits(role_id, org.id)]
        intel: dict[str, dict] = {}
        for e in visible:
            if e.kind == ev.ESPIONAGE_RESOLVED and e.payload["org"] == org.id and e.payload["findings"]:
                intel[e.payload["target"]] = {"turn": e.turn, "projects": e.payload["findings"]}
        committed_talent = committed_funds = 0
        for r in self.scenario.org_roles(org.id):
            for o in self.pending.get(r.id, []):
                committed_talent += o.talent_cost()
                committed_funds += o.funds_cost()
        you = org.to_dict()
        you["projects"] = org.projects()
        you["talent_available"] = org.talent_pool - committed_talent
        you["funds_available"] = org.funds - committed_funds
        you["pending_orders"] = [o.to_dict() for r in self.scenario.org_roles(org.id)
                                 for o in self.pending.get(r.id, [])]
        you["intel"] = intel
        return FilteredView(
            role=role_id,
            organization=org.id,
            turn=self.world.turn,
            year=self.world.year,
            phase=self.world.phase.value,
            chaos=self.world.chaos,
            free_talent=self.world.free_talent,
            you=you,
            orgs={o_id: self._org_state(o_id).public_view() for o_id in sorted(self.world.orgs)},
            bulletin=list(self.world.narrative),
            events=[e.to_dict() for e in visible] if include_events else [],
        )

    def _facilitator_view(self) -> FilteredView:
        return FilteredView(
            role=ev.FACILITATOR,
            organization=None,
            turn=self.world.turn,
            year=self.world.year,
            phase=self.world.phase.value,
            chaos=self.world.chaos,
            free_talent=self.world.free_talent,
            you=None,
            orgs={o_id: self._org_state(o_id).to_dict() for o_id in sorted(self.world.orgs)},
            bulletin=list(self.world.narrative),
            events=[e.to_dict() for e in self.events],
            unruled_free_text=self.unruled_free_text(),
        )

    # Digests / serialization --------------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "schema": STATE_SCHEMA,
            "scenario": self.scenario.to_dict(),
            "seed": self.seed,
            "assignments": self.assignments,
            "world": self.world.to_dict(),
            "pending": {role: [o.to_dict() for o in orders]
                        for role, orders in sorted(self.pending.items())},
            "rulings": self.rulings,
            "queued_events": self.queued_events,
            "cursor": self.cursor,
            "next_seq": self.next_seq,
        }

    def state_digest(self) -> str:
        return sha256_hex(canonical_json(self.state_dict()))

    def event_lines(self) -> list[str]:
        return [e.to_line() for e in self.events]


# Log files ---------------------------------------------------------------------

def serialize_log(game: Game, trailer: bool = True) -> str:
    """JSONL event log, one canonical line per event, digest trailer last."""
    lines = game.event_lines()
    if trailer:
        body = "".join(line + "\n" for line in lines)
        lines.append(canonical_json({"log_sha256": sha256_hex(body),
                                     "state_sha256": game.state_digest()}))
    return "".join(line + "\n" for line in lines)


def parse_log(text: str) -> Game:
    """Rebuild a game from a JSONL log, verifying the digest trailer if present."""
    import json as _json

    raw_lines = [line for line in text.split("\n") if line.strip()]
    if not raw_lines:
        raise CorruptLog("empty event log")
    records = []
    trailer = None
    for i, line in enumerate(raw_lines):
        try:
            record = _json.loads(line)
        except ValueError as exc:
            raise CorruptLog(f"line {i + 1} is not valid JSON: {exc}") from exc
        if isinstance(record, dict) and "log_sha256" in record:
            if i != len(raw_lines) - 1:
                raise CorruptLog("digest trailer must be the final line")
            trailer = record
        else:
            records.append(record)
    if trailer is not None:
        body = "".join(line + "\n" for line in raw_lines[:-1])
        if sha256_hex(body) != trailer["log_sha256"]:
            raise CorruptLog("log digest mismatch: content was altered")
    game = Game.replay(records)
    if trailer is not None and game.state_digest() != trailer.get("state_sha256"):
        raise CorruptLog("state digest mismatch after replay")
    return game
