"""Append-only, visibility-scoped game events.

The world state is a pure fold over these; anything that changes state is
recorded here first. Events carry no wall-clock timestamps so that two runs
of the same game produce byte-identical logs.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import CorruptLog
from .model import canonical_json


# Event kinds
GAME_CREATED = "game_created"
MESSAGE = "message"
ORDERS_SUBMITTED = "orders_submitted"
PHASE_ADVANCED = "phase_advanced"
FREE_TEXT_RULED = "free_text_ruled"
WORLD_EVENT_QUEUED = "world_event_queued"
RULING_APPLIED = "ruling_applied"
PRODUCT_DEPLOYED = "product_deployed"
PRODUCT_WITHDRAWN = "product_withdrawn"
REGULATION_ENACTED = "regulation_enacted"
RESEARCH_RESOLVED = "research_resolved"
DEVELOPMENT_RESOLVED = "development_resolved"
TECH_UNLOCKED = "tech_unlocked"
PRODUCT_DEVELOPED = "product_developed"
TECH_PUBLISHED = "tech_published"
ESPIONAGE_RESOLVED = "espionage_resolved"
ESPIONAGE_EXPOSED = "espionage_exposed"
TALENT_POACHED = "talent_poached"
TALENT_ATTRACTED = "talent_attracted"
REVENUE_COLLECTED = "revenue_collected"
ECONOMY_EFFECT = "economy_effect"
TAX_COLLECTED = "tax_collected"
LOBBY_RESOLVED = "lobby_resolved"
SAFETY_INVESTMENT_RESOLVED = "safety_investment_resolved"
CHAOS_UPDATED = "chaos_updated"
WORLD_EVENT_TRIGGERED = "world_event_triggered"
TURN_RESOLVED = "turn_resolved"
GAME_FINISHED = "game_finished"

ALL_KINDS = frozenset(v for k, v in list(globals().items()) if k.isupper() and isinstance(v, str))

FACILITATOR = "facilitator"
WORLD = "world"


@dataclass(frozen=True)
class Visibility:
    """Who may see an event: everyone, one org, a set of roles, or only the facilitator."""

    scope: str  # public | org | roles | facilitator
    org: str | None = None
    roles: tuple[str, ...] | None = None

    @classmethod
    def public(cls) -> "Visibility":
        return cls("public")

    @classmethod
    def private_to_org(cls, org_id: str) -> "Visibility":
        return cls("org", org=org_id)

    @classmethod
    def private_to_roles(cls, roles) -> "Visibility":
        return cls("roles", roles=tuple(sorted(set(roles))))

    @classmethod
    def facilitator_only(cls) -> "Visibility":
        return cls("facilitator")

    def admits(self, role_id: str | None, org_id: str | None, facilitator: bool = False) -> bool:
        if facilitator:
            return True
        if self.scope == "public":
            return True
        if self.scope == "org":
            return org_id is not None and org_id == self.org
        if self.scope == "roles":
            return role_id is not None and role_id in (self.roles or ())
        return False  # facilitator-only

    def to_wire(self):
        if self.scope == "public":
            return "public"
        if self.scope == "facilitator":
            return "facilitator"
        if self.scope == "org":
            return {"org": self.org}
        return {"roles": list(self.roles or ())}

    @classmethod
    def from_wire(cls, data) -> "Visibility":
        if data == "public":
            return cls.public()
        if data == "facilitator":
            return cls.facilitator_only()
        if isinstance(data, dict):
            if set(data) == {"org"} and isinstance(data["org"], str):
                return cls.private_to_org(data["org"])
            if set(data) == {"roles"} and isinstance(data["roles"], list):
                return cls.private_to_roles(data["roles"])
        raise CorruptLog(f"bad visibility field: {data!r}")


@dataclass(frozen=True)
class GameEvent:
    seq: int
    turn: int
    phase: str
    kind: str
    actor: str  # role id, "facilitator", or "world"
    payload: dict
    visibility: Visibility

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "turn": self.turn,
            "phase": self.phase,
            "kind": self.kind,
            "actor": self.actor,
            "payload": self.payload,
            "visibility": self.visibility.to_wire(),
        }

    def to_line(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "GameEvent":
        if not isinstance(data, dict) or set(data) != {"seq", "turn", "phase", "kind", "actor",
                                                       "payload", "visibility"}:
            raise CorruptLog(f"malformed event record: {data!r}")
        if data["kind"] not in ALL_KINDS:
            raise CorruptLog(f"unknown event kind {data['kind']!r}")
        if not isinstance(data["payload"], dict):
            raise CorruptLog("event payload must be an object")
        return cls(
            seq=data["seq"],
            turn=data["turn"],
            phase=data["phase"],
            kind=data["kind"],
            actor=data["actor"],
            payload=data["payload"],
            visibility=Visibility.from_wire(data["visibility"]),
        )
