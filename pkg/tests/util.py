"""Shared test helpers: tiny scenarios, random scenario generation, audits.

The audit functions re-implement the spec-level rules independently of the
engine (separate code path), so they can act as oracles over full games.
"""
from __future__ import annotations

import random

from futuresim.engine import Game
from futuresim.model import (
    ChaosRules,
    DiceRule,
    GoalTerm,
    MarketRules,
    OrganizationSpec,
    OrderKind,
    ParameterEffect,
    ProductCard,
    RoleSheet,
    Scenario,
    TechNode,
    WorldEventSpec,
    validate_scenario,
)

ALL_KINDS = frozenset(OrderKind)
NON_GOV_KINDS = frozenset(k for k in OrderKind if k not in (OrderKind.REGULATE, OrderKind.TAX))


def micro_scenario(num_turns: int = 4, talent: int = 3, techs: int = 4,
                   research_cost: int = 1, initial_chaos: int = 20) -> Scenario:
    """One org, one role, a flat row of cheap techs: cheap statistical games."""
    tree = tuple(
        TechNode(id=f"t{i}", name=f"Tech {i}", tier=0, prerequisites=(),
                 research_cost=research_cost, publish_discount=0)
        for i in range(techs)
    )
    return Scenario(
        id="micro",
        title="Micro bench scenario",
        start_year=2025,
        years_per_turn=1,
        num_turns=num_turns,
        tech_tree=tree,
        product_deck=(),
        organizations=(OrganizationSpec(id="lab", name="Lab", kind="corporation",
                                        initial_talent=talent, initial_funds=10),),
        roles=(RoleSheet(id="lead", title="Lab Lead", organization="lab",
                         entitlements=frozenset(NON_GOV_KINDS),
                         goal=(GoalTerm("org_tech_count", 1),), briefing="Run the lab."),),
        chaos_rules=ChaosRules(initial=initial_chaos),
        event_table=(),
        dice=DiceRule(),
        market=MarketRules(),
    )


def duo_scenario(num_turns: int = 4) -> Scenario:
    """Two orgs / three roles; enough surface for espionage, poaching, taxes."""
    tree = (
        TechNode(id="base", name="Base", tier=0, prerequisites=(), research_cost=1,
                 publish_discount=0),
        TechNode(id="adv", name="Advanced", tier=1, prerequisites=("base",), research_cost=4,
                 publish_discount=2),
    )
    deck = (
        ProductCard(id="widget", name="Widget", required_tech="base", dev_cost=1,
                    effects=(ParameterEffect("org_influence", 1, "owner"),),
                    chaos_externality=3, revenue=4, category="consumer"),
        ProductCard(id="shield", name="Shield", required_tech="base", dev_cost=1,
                    effects=(), chaos_externality=-2, revenue=1, category="cyber"),
        ProductCard(id="magnet", name="Talent Magnet", required_tech="base", dev_cost=1,
                    effects=(ParameterEffect("org_talent_attraction", 2, "owner"),),
                    chaos_externality=0, revenue=0, category="education"),
    )
    return Scenario(
        id="duo",
        title="Duo test scenario",
        start_year=2024,
        years_per_turn=1,
        num_turns=num_turns,
        tech_tree=tree,
        product_deck=deck,
        organizations=(
            OrganizationSpec(id="gov", name="Government", kind="government",
                             initial_talent=6, initial_funds=30),
            OrganizationSpec(id="corp", name="Corporation", kind="corporation",
                             initial_talent=8, initial_funds=20),
        ),
        roles=(
            RoleSheet(id="minister", title="Minister", organization="gov",
                      entitlements=frozenset(OrderKind),
                      goal=(GoalTerm("world_stability", 1),), briefing="Govern."),
            RoleSheet(id="ceo", title="CEO", organization="corp",
                      entitlements=frozenset(NON_GOV_KINDS),
                      goal=(GoalTerm("org_funds", 1),), briefing="Profit."),
            RoleSheet(id="cto", title="CTO", organization="corp",
                      entitlements=frozenset(NON_GOV_KINDS),
                      goal=(GoalTerm("org_tech_count", 2),), briefing="Build."),
        ),
        chaos_rules=ChaosRules(initial=20),
        event_table=(WorldEventSpec(id="warn40", name="Warning", threshold=40,
                                    narrative="Public warning issued.", chaos_delta=0),),
        dice=DiceRule(),
        market=MarketRules(cost_per_talent=2, lobby_funds_per_influence=5,
                           initial_free_talent=4),
    )


def random_scenario(rnd: random.Random) -> Scenario:
    """A randomized scenario that always passes validation."""
    num_orgs = rnd.randint(2, 4)
    orgs = []
    for i in range(num_orgs):
        kind = "government" if i == 0 and rnd.random() < 0.7 else "corporation"
        orgs.append(OrganizationSpec(
            id=f"org{i}", name=f"Org {i}", kind=kind,
            initial_talent=rnd.randint(3, 10), initial_funds=rnd.randint(10, 30)))

    tiers = rnd.randint(2, 4)
    tree: list[TechNode] = []
    by_tier: dict[int, list[str]] = {}
    for tier in range(tiers):
        for j in range(rnd.randint(1, 3)):
            tech_id = f"t{tier}_{j}"
            prereq_pool = [t for lower in range(tier) for t in by_tier.get(lower, [])]
            prereqs = ()
            if tier > 0 and prereq_pool:
                # always anchor at least one prerequisite in tier-1 to keep tiers honest
                anchor = rnd.choice(by_tier[tier - 1])
                extra = [p for p in prereq_pool if p != anchor]
                picked = rnd.sample(extra, k=min(len(extra), rnd.randint(0, 1)))
                prereqs = tuple([anchor] + picked)
            tree.append(TechNode(id=tech_id, name=tech_id, tier=tier, prerequisites=prereqs,
                                 research_cost=rnd.randint(1, 4),
                                 publish_discount=rnd.randint(0, 2)))
            by_tier.setdefault(tier, []).append(tech_id)

    categories = ("health", "finance", "education", "defense", "cyber", "surveillance", "consumer")
    deck = []
    for i in range(rnd.randint(0, 6)):
        effects = []
        if rnd.random() < 0.4:
            effects.append(ParameterEffect("org_talent_attraction", rnd.randint(1, 2), "owner"))
        if rnd.random() < 0.3:
            effects.append(ParameterEffect("org_influence", 1, "owner"))
        deck.append(ProductCard(
            id=f"p{i}", name=f"Product {i}", required_tech=rnd.choice(tree).id,
            dev_cost=rnd.randint(1, 3), effects=tuple(effects),
            chaos_externality=rnd.randint(-2, 4), revenue=rnd.randint(0, 5),
            category=rnd.choice(categories)))

    roles = []
    metrics = ("org_funds", "org_tech_count", "world_stability", "org_influence")
    for org in orgs:
        for j in range(rnd.randint(1, 2)):
            kinds = ALL_KINDS if org.kind == "government" else NON_GOV_KINDS
            goal = tuple(GoalTerm(rnd.choice(metrics), rnd.randint(1, 3))
                         for _ in range(rnd.randint(1, 2)))
            roles.append(RoleSheet(id=f"{org.id}_r{j}", title=f"Role {j} of {org.id}",
                                   organization=org.id, entitlements=frozenset(kinds),
                                   goal=goal, briefing=f"You run {org.id}."))

    events = []
    for threshold in (40, 70, 90):
        if rnd.random() < 0.6:
            events.append(WorldEventSpec(
                id=f"ev{threshold}", name=f"Event {threshold}", threshold=threshold,
                narrative=f"Threshold {threshold} crossed.",
                chaos_delta=rnd.randint(0, 4)))

    scenario = Scenario(
        id=f"random_{rnd.randint(0, 10**9)}",
        title="Randomized scenario",
        start_year=rnd.randint(2020, 2028),
        years_per_turn=rnd.choice((1, 2)),
        num_turns=rnd.randint(4, 8),
        tech_tree=tuple(tree),
        product_deck=tuple(deck),
        organizations=tuple(orgs),
        roles=tuple(roles),
        chaos_rules=ChaosRules(initial=rnd.randint(0, 50)),
        event_table=tuple(events),
        dice=DiceRule(sides=6, success_threshold=rnd.choice((4, 5))),
        market=MarketRules(cost_per_talent=rnd.randint(1, 3),
                           lobby_funds_per_influence=5,
                           initial_free_talent=rnd.randint(0, 6)),
    )
    assert validate_scenario(scenario) == [], "random_scenario must emit valid content"
    return scenario


def play_random_game(seed: int):
    """Random scenario, random policy mix, played to the end."""
    from futuresim.agents import POLICIES, make_policy
    from futuresim.batch import play_game

    rnd = random.Random(seed)
    scenario = random_scenario(rnd)
    names = sorted(POLICIES)
    policies = {r.id: make_policy(rnd.choice(names), scenario, r.id) for r in scenario.roles}
    game = play_game(scenario, policies, seed=rnd.randint(0, 2**62))
    return game


# -- independent audits ------------------------------------------------------


def audit_structural(game: Game) -> None:
    """Replays the log one event at a time, checking the fold-level invariants:
    chaos bounds, talent conservation, prerequisite-ordered unlocks."""
    scenario = game.scenario
    by_id = {t.id: t for t in scenario.tech_tree}
    shadow = Game()
    expected_total = None
    unlocked: dict[str, set[str]] = {}
    for event in game.events:
        shadow.events.append(event)
        shadow.next_seq = event.seq + 1
        shadow._apply(event)
        world = shadow.world
        assert 0 <= world.chaos <= 100, f"chaos out of bounds after seq {event.seq}"
        total = world.free_talent + sum(o.talent_pool for o in world.orgs.values())
        if expected_total is None:
            expected_total = total  # set by game_created
        if event.kind == "ruling_applied":
            expected_total += event.payload["applied"]["talent"]
        assert total == expected_total, (
            f"talent not conserved at seq {event.seq}: {total} != {expected_total}")
        if event.kind == "tech_unlocked":
            org = event.payload["org"]
            tech = event.payload["tech"]
            have = unlocked.setdefault(org, set())
            missing = [p for p in by_id[tech].prerequisites if p not in have]
            assert not missing, f"unlock of {tech} for {org} before prerequisites {missing}"
            have.add(tech)
    assert shadow.state_digest() == game.state_digest()


def audit_phase_sequence(game: Game) -> None:
    """The log's phase markers must spell the fixed cycle exactly."""
    phases = ["negotiation"]  # game_created opens in negotiation
    for event in game.events:
        if event.kind == "phase_advanced":
            phases.append(event.payload["phase"])
    n = game.scenario.num_turns
    expected = []
    for _ in range(n):
        expected += ["negotiation", "private_actions", "public_actions", "world_update"]
    expected.append("debrief")
    assert phases == expected, f"phase sequence mismatch: {phases}"


def _admits(visibility_wire, role_id: str, org_id: str) -> bool:
    """Independent re-implementation of the visibility rule (test oracle)."""
    if visibility_wire == "public":
        return True
    if visibility_wire == "facilitator":
        return False
    if isinstance(visibility_wire, dict):
        if "org" in visibility_wire:
            return visibility_wire["org"] == org_id
        if "roles" in visibility_wire:
            return role_id in visibility_wire["roles"]
    raise AssertionError(f"unknown visibility {visibility_wire!r}")


def audit_fog_of_war(game: Game) -> None:
    for role in game.scenario.roles:
        view = game.player_view(role.id)
        for event in view.events:
            assert _admits(event["visibility"], role.id, role.organization), (
                f"role {role.id} saw non-admitted event seq {event['seq']} "
                f"({event['kind']}, {event['visibility']})")
        for org_id, block in view.orgs.items():
            if org_id == role.organization:
                continue
            for project in block.get("projects", []):
                assert project["visibility"] == "public", (
                    f"role {role.id} saw {org_id}'s private project {project}")
