"""Headless batch runner: many full games, per-game records, aggregates.

Game i in a batch uses seed base_seed + i; every stream the engine or the
agents draw from is keyed off that game seed, so batches are reproducible
and games share no randomness. Games may run on worker threads; records are
ordered by game index either way.
"""
from __future__ import annotations

import csv
import io
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import events as ev
from . import rng
from .agents import AgentPolicy, make_policy
from .engine import Game
from .errors import IncompleteAssignment, InvalidScenario
from .model import Phase, Scenario, canonical_json, validate_scenario


@dataclass
class GameRecord:
    index: int
    seed: int
    final_chaos: int
    turns_played: int
    tech_counts: dict[str, int]
    unlock_turns: dict[str, int]  # tech -> first turn anyone unlocked it
    scores: dict[str, int]
    cooperation_events: int

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "seed": self.seed,
            "final_chaos": self.final_chaos,
            "turns_played": self.turns_played,
            "tech_counts": self.tech_counts,
            "unlock_turns": self.unlock_turns,
            "scores": self.scores,
            "cooperation_events": self.cooperation_events,
        }


@dataclass
class BatchResult:
    scenario_id: str
    policies: dict[str, str]
    base_seed: int
    records: list[GameRecord]

    @property
    def n_games(self) -> int:
        return len(self.records)

    def metrics(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {"final_chaos": [], "cooperation_events": []}
        for r in self.records:
            out["final_chaos"].append(r.final_chaos)
            out["cooperation_events"].append(r.cooperation_events)
            for org, n in r.tech_counts.items():
                out.setdefault(f"tech_count:{org}", []).append(n)
            for role, score in r.scores.items():
                out.setdefault(f"score:{role}", []).append(score)
        return out

    def aggregates(self) -> dict[str, dict]:
        out = {}
        for name, values in sorted(self.metrics().items()):
            ordered = sorted(values)
            if len(ordered) >= 2:
                q1, median, q3 = statistics.quantiles(ordered, n=4, method="inclusive")
            else:
                q1 = median = q3 = float(ordered[0])
            out[name] = {
                "mean": statistics.fmean(ordered),
                "min": ordered[0],
                "max": ordered[-1],
                "q1": q1,
                "median": median,
                "q3": q3,
            }
        return out

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "policies": dict(sorted(self.policies.items())),
            "base_seed": self.base_seed,
            "n_games": self.n_games,
            "records": [r.to_dict() for r in self.records],
            "aggregates": self.aggregates(),
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict()) + "\n"

    def to_csv(self) -> str:
        orgs = sorted({org for r in self.records for org in r.tech_counts})
        roles = sorted({role for r in self.records for role in r.scores})
        techs = sorted({t for r in self.records for t in r.unlock_turns})
        header = (["index", "seed", "final_chaos", "turns_played", "cooperation_events"]
                  + [f"tech_count:{o}" for o in orgs]
                  + [f"score:{r}" for r in roles]
                  + [f"unlock_turn:{t}" for t in techs])
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for r in self.records:
            writer.writerow(
                [r.index, r.seed, r.final_chaos, r.turns_played, r.cooperation_events]
                + [r.tech_counts.get(o, 0) for o in orgs]
                + [r.scores.get(role, 0) for role in roles]
                + [r.unlock_turns.get(t, "") for t in techs])
        return buf.getvalue()


def play_game(scenario: Scenario, policies: dict[str, AgentPolicy], seed: int) -> Game:
    """One full scripted game, harness acting as facilitator."""
    assignments = {role_id: f"agent:{p.name}" for role_id, p in policies.items()}
    game = Game.new_game(scenario, seed, assignments)
    while game.world.phase not in (Phase.DEBRIEF, Phase.FINISHED):
        phase = game.world.phase
        if phase in (Phase.PRIVATE_ACTIONS, Phase.PUBLIC_ACTIONS):
            for role_id in sorted(policies):
                view = game.player_view(role_id, include_events=False)
                stream = rng.Stream(rng.stream_key(seed, game.world.turn,
                                                   "agent:" + phase.value, role_id))
                orders = policies[role_id].decide(view, stream)
                if orders:
                    game.submit_orders(role_id, orders)
        game.advance_phase()
    return game


def record_for(index: int, seed: int, game: Game) -> GameRecord:
    report = game.debrief()
    unlock_turns: dict[str, int] = {}
    cooperation = 0
    for event in game.events:
        if event.kind == ev.TECH_UNLOCKED:
            unlock_turns.setdefault(event.payload["tech"], event.turn)
        elif event.kind == ev.TECH_PUBLISHED:
            cooperation += 1
        elif event.kind == ev.RESEARCH_RESOLVED:
            partner = event.payload.get("partner")
            if partner and event.payload["org"] < partner:
                cooperation += 1
    return GameRecord(
        index=index,
        seed=seed,
        final_chaos=game.world.chaos,
        turns_played=game.world.turn,
        tech_counts={org_id: len(org.unlocked_techs)
                     for org_id, org in sorted(game.world.orgs.items())},
        unlock_turns=unlock_turns,
        scores={role: s["total"] for role, s in report.scores.items()},
        cooperation_events=cooperation,
    )


def run_batch(scenario: Scenario, policy_assignment: dict[str, str], n_games: int,
              base_seed: int, workers: int = 1) -> BatchResult:
    """n_games independent games with seeds base_seed+i; deterministic output."""
    violations = validate_scenario(scenario)
    if violations:
        raise InvalidScenario(violations)
    role_ids = {r.id for r in scenario.roles}
    if set(policy_assignment) != role_ids:
        missing = sorted(role_ids - set(policy_assignment))
        extra = sorted(set(policy_assignment) - role_ids)
        raise IncompleteAssignment(f"missing roles {missing}, unknown roles {extra}")
    if n_games < 1:
        raise ValueError("n_games must be >= 1")

    def one(index: int) -> GameRecord:
        seed = base_seed + index
        policies = {role_id: make_policy(name, scenario, role_id)
                    for role_id, name in policy_assignment.items()}
        return record_for(index, seed, play_game(scenario, policies, seed))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, range(n_games)))
    else:
        records = [one(i) for i in range(n_games)]
    return BatchResult(scenario_id=scenario.id, policies=policy_assignment,
                       base_seed=base_seed, records=records)
