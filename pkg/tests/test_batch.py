"""Batch runner: determinism, aggregates, output formats."""
import csv
import io
import statistics

import pytest

from futuresim.batch import run_batch
from futuresim.errors import IncompleteAssignment

from .util import duo_scenario


@pytest.fixture(scope="module")
def duo():
    return duo_scenario()


@pytest.fixture(scope="module")
def assignment(duo):
    return {r.id: "random_legal" for r in duo.roles}


def test_single_game_record_matches_debrief(duo, assignment):
    from futuresim.agents import make_policy
    from futuresim.batch import play_game

    result = run_batch(duo, assignment, n_games=1, base_seed=42)
    [record] = result.records
    policies = {r: make_policy(p, duo, r) for r, p in assignment.items()}
    game = play_game(duo, policies, seed=42)
    report = game.debrief()
    assert record.final_chaos == game.world.chaos
    assert record.scores == {role: s["total"] for role, s in report.scores.items()}
    assert record.tech_counts == {o: len(s.unlocked_techs)
                                  for o, s in game.world.orgs.items()}


def test_same_inputs_identical_output(duo, assignment):
    a = run_batch(duo, assignment, n_games=8, base_seed=7)
    b = run_batch(duo, assignment, n_games=8, base_seed=7)
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()


def test_sequential_and_concurrent_agree(duo, assignment):
    seq = run_batch(duo, assignment, n_games=8, base_seed=21, workers=1)
    par = run_batch(duo, assignment, n_games=8, base_seed=21, workers=4)
    assert seq.to_json() == par.to_json()


def test_aggregates_recomputable_from_records(duo, assignment):
    result = run_batch(duo, assignment, n_games=10, base_seed=3)
    chaos_values = sorted(r.final_chaos for r in result.records)
    agg = result.aggregates()["final_chaos"]
    assert agg["mean"] == statistics.fmean(chaos_values)
    assert agg["min"] == chaos_values[0]
    assert agg["max"] == chaos_values[-1]
    q1, median, q3 = statistics.quantiles(chaos_values, n=4, method="inclusive")
    assert (agg["q1"], agg["median"], agg["q3"]) == (q1, median, q3)


def test_csv_shape(duo, assignment):
    result = run_batch(duo, assignment, n_games=5, base_seed=11)
    rows = list(csv.reader(io.StringIO(result.to_csv())))
    header, data = rows[0], rows[1:]
    assert len(data) == 5
    assert header[:5] == ["index", "seed", "final_chaos", "turns_played", "cooperation_events"]
    assert any(c.startswith("score:") for c in header)
    assert all(len(r) == len(header) for r in data)


def test_incomplete_assignment_rejected(duo, assignment):
    partial = dict(assignment)
    partial.popitem()
    with pytest.raises(IncompleteAssignment):
        run_batch(duo, partial, n_games=1, base_seed=0)
    with pytest.raises(ValueError):
        run_batch(duo, assignment, n_games=0, base_seed=0)


def test_cooperation_reduces_chaos_direction(default):
    roles = [r.id for r in default.roles]
    coop = run_batch(default, {r: "safety_cooperator" for r in roles}, n_games=60, base_seed=500)
    defect = run_batch(default, {r: "aggressive_defector" for r in roles}, n_games=60, base_seed=500)
    assert coop.aggregates()["final_chaos"]["mean"] < defect.aggregates()["final_chaos"]["mean"]
    assert coop.aggregates()["cooperation_events"]["mean"] > 0
