"""Scripted policies: legality, characteristic behaviors, the tail rule."""
import math

import pytest

from futuresim import rng
from futuresim.agents import (
    TAIL_PROBABILITY,
    AggressiveDefector,
    GreedyTech,
    RandomLegal,
    SafetyCooperator,
    make_policy,
    policy_catalog,
)
from futuresim.batch import play_game
from futuresim.engine import Game
from futuresim.model import OrderKind, Phase

from .util import duo_scenario, play_random_game


def fresh_view(scenario, role_id, seed=1):
    assignments = {r.id: f"p:{r.id}" for r in scenario.roles}
    game = Game.new_game(scenario, seed=seed, assignments=assignments)
    game.advance_phase()  # private actions
    return game, game.player_view(role_id, include_events=False)


def test_catalog_has_at_least_four(default):
    catalog = policy_catalog()
    assert len(catalog) >= 4
    names = {cls.name for cls in catalog}
    assert {"random_legal", "greedy_tech", "safety_cooperator", "aggressive_defector"} <= names
    with pytest.raises(ValueError):
        make_policy("does_not_exist", default, default.roles[0].id)


def test_every_policy_validates_on_turn_one(default):
    for cls in policy_catalog():
        assignments = {r.id: f"p:{r.id}" for r in default.roles}
        game = Game.new_game(default, seed=77, assignments=assignments)
        game.advance_phase()
        for role in default.roles:
            policy = cls(default, role.id)
            view = game.player_view(role.id, include_events=False)
            stream = rng.Stream(f"smoke:{cls.name}:{role.id}")
            orders = policy.decide(view, stream)
            if orders:
                game.submit_orders(role.id, orders)  # raises if anything is illegal


def test_zero_talent_means_no_allocations():
    scenario = duo_scenario()
    game, view = fresh_view(scenario, "cto")
    game.submit_orders("ceo", [  # drain the org budget first
        __import__("futuresim.model", fromlist=["Order"]).Order(
            kind=OrderKind.ALLOCATE_RESEARCH, issuing_role="ceo", phase_tag="private",
            tech="base", talent=8, visibility="private")])
    view = game.player_view("cto", include_events=False)
    assert view.you["talent_available"] == 0
    policy = RandomLegal(scenario, "cto")
    for i in range(20):
        orders = policy.decide(view, rng.Stream(f"zero:{i}"))
        assert all(o.talent_cost() == 0 for o in orders)


def test_greedy_tech_allocates_full_budget_to_cheapest(default):
    game, view = fresh_view(default, "tencent_lab", seed=5)
    policy = GreedyTech(default, "tencent_lab")
    stream = rng.Stream("greedy-fixture")  # first draw > 0.1, no tail on this stream
    orders = policy.decide(view, stream)
    assert len(orders) == 1
    [o] = orders
    assert o.kind is OrderKind.ALLOCATE_RESEARCH
    assert o.talent == view.you["talent_available"]
    cheapest = min((t for t in default.tech_tree if not t.prerequisites),
                   key=lambda t: (t.research_cost, t.id))
    assert o.tech == cheapest.id


def test_greedy_tech_never_emits_safety_investment(default):
    policies = {r.id: GreedyTech(default, r.id) for r in default.roles}
    game = play_game(default, policies, seed=31)
    for event in game.events:
        assert event.kind != "safety_investment_resolved"


def test_defector_never_publishes(default):
    policies = {r.id: AggressiveDefector(default, r.id) for r in default.roles}
    game = play_game(default, policies, seed=32)
    assert not any(e.kind == "tech_published" for e in game.events)


def test_cooperator_publishes_and_collaborates(default):
    policies = {r.id: SafetyCooperator(default, r.id) for r in default.roles}
    game = play_game(default, policies, seed=33)
    kinds = {e.kind for e in game.events}
    assert "tech_published" in kinds
    assert "safety_investment_resolved" in kinds
    assert any(e.kind == "research_resolved" and "partner" in e.payload for e in game.events)


def test_tail_substitution_frequency(default):
    # greedy on an espionage-entitled role: tails are espionage orders,
    # plainly distinguishable from the policy's normal research-only output
    game, view = fresh_view(default, "tencent_lab", seed=8)
    policy = GreedyTech(default, "tencent_lab")
    n = 10_000
    tails = 0
    for i in range(n):
        orders = policy.decide(view, rng.Stream(f"tail:{i}"))
        if any(o.kind is OrderKind.ESPIONAGE for o in orders):
            tails += 1
    sigma = math.sqrt(TAIL_PROBABILITY * (1 - TAIL_PROBABILITY) / n)
    assert abs(tails / n - TAIL_PROBABILITY) <= 3 * sigma, f"{tails}/{n}"


def test_tail_never_exceeds_budget(default):
    game, view = fresh_view(default, "tencent_lab", seed=9)
    policy = GreedyTech(default, "tencent_lab")
    for i in range(300):
        orders = policy.decide(view, rng.Stream(f"budget:{i}"))
        assert sum(o.talent_cost() for o in orders) <= view.you["talent_available"]


def test_legality_across_random_games():
    # submit_orders raises on any illegal agent order, so surviving the loop
    # is the assertion; views are the only information agents receive
    for seed in range(30):
        game = play_random_game(seed + 500)
        assert game.world.phase in (Phase.DEBRIEF, Phase.FINISHED)


def test_batch_games_share_no_streams(default):
    roles = {r.id: "random_legal" for r in default.roles}
    from futuresim.batch import run_batch
    result = run_batch(default, roles, n_games=4, base_seed=9000)
    digests = {r.seed for r in result.records}
    assert len(digests) == 4
    chaos = [r.final_chaos for r in result.records]
    scores = [tuple(sorted(r.scores.items())) for r in result.records]
    assert len(set(scores)) > 1  # distinct games actually diverge
