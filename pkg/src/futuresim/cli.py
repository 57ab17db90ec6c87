"""Operator command line: validate content, simulate, host, replay.

Every subcommand is scriptable: no prompts, machine-readable output behind
--json, exit codes 0 (ok), 1 (domain failure), 2 (unreadable input).
Flags mirror the FUTURESIM_* environment variables and take precedence.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import content as content_mod
from .agents import POLICIES
from .batch import run_batch
from .engine import Game
from .errors import CorruptLog, GameError, InvalidScenario, ParseError, SchemaVersionUnsupported
from .events import GameEvent
from .model import Phase


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="futuresim",
                                     description="AI-futures wargame engine and server")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a scenario file")
    p.add_argument("path", help="scenario JSON file")
    p.add_argument("--json", action="store_true", dest="as_json")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run a headless agent batch")
    p.add_argument("--scenario", default="default",
                   help="scenario id or path to a scenario file (default: shipped default)")
    p.add_argument("--policies", nargs="+", default=["all=random_legal"], metavar="ROLE=NAME",
                   help=f"role=policy pairs; 'all=NAME' assigns every role; "
                        f"policies: {', '.join(sorted(POLICIES))}")
    p.add_argument("--n", type=int, default=100, help="number of games")
    p.add_argument("--seed", type=int, default=0, help="base seed; game i uses seed+i")
    p.add_argument("--out", default=None, help="directory for batch.json and batch.csv")
    p.add_argument("--workers", type=int, default=1, help="worker threads")
    p.add_argument("--json", action="store_true", dest="as_json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("host", help="run the multiplayer game server")
    p.add_argument("--bind", default=None, help="host:port (or FUTURESIM_BIND_ADDR)")
    p.add_argument("--content-dir", default=None, help="extra scenario dir (or FUTURESIM_CONTENT_DIR)")
    p.add_argument("--data-dir", default=None, help="session storage dir (or FUTURESIM_DATA_DIR)")
    p.set_defaults(func=cmd_host)

    p = sub.add_parser("replay", help="replay an event log and inspect the state")
    p.add_argument("log_path", help="JSONL event log")
    p.add_argument("--to-turn", type=int, default=None, dest="to_turn",
                   help="stop at the start of this turn instead of the end")
    p.add_argument("--debrief", action="store_true", help="print the full debrief report")
    p.add_argument("--json", action="store_true", dest="as_json")
    p.set_defaults(func=cmd_replay)

    return parser


def cmd_validate(args) -> int:
    path = Path(args.path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return 2
    try:
        scenario = content_mod.load_scenario(raw)
    except (ParseError, SchemaVersionUnsupported) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvalidScenario as exc:
        if args.as_json:
            print(json.dumps({"ok": False, "violations": [v.to_dict() for v in exc.violations]}))
        else:
            for v in exc.violations:
                print(f"{v.rule}: {v.message}")
        return 1
    if args.as_json:
        print(json.dumps({"ok": True, "scenario_id": scenario.id, "violations": []}))
    else:
        print(f"OK: {scenario.id} ({scenario.title})")
    return 0


def _load_scenario_arg(value: str):
    if os.path.sep in value or value.endswith(".json"):
        return content_mod.load_scenario_file(value)
    return content_mod.scenario_by_id(value)


def _parse_policies(pairs: list[str], role_ids: list[str]) -> dict[str, str]:
    assignment: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--policies expects ROLE=NAME, got {pair!r}")
        role, name = pair.split("=", 1)
        if name not in POLICIES:
            raise ValueError(f"unknown policy {name!r}; available: {sorted(POLICIES)}")
        if role == "all":
            for r in role_ids:
                assignment[r] = name
        else:
            if role not in role_ids:
                raise ValueError(f"unknown role {role!r}; roles: {role_ids}")
            assignment[role] = name
    return assignment


def cmd_simulate(args) -> int:
    try:
        scenario = _load_scenario_arg(args.scenario)
        if args.n < 1:
            raise ValueError("--n must be >= 1")
        assignment = _parse_policies(args.policies, [r.id for r in scenario.roles])
        missing = sorted({r.id for r in scenario.roles} - set(assignment))
        if missing:
            raise ValueError(f"no policy for roles {missing} (hint: start with all=NAME)")
        result = run_batch(scenario, assignment, args.n, args.seed, workers=args.workers)
    except (GameError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "batch.json").write_text(result.to_json(), encoding="utf-8")
        (out / "batch.csv").write_text(result.to_csv(), encoding="utf-8")
    if args.as_json:
        print(result.to_json(), end="")
    else:
        print(f"{result.n_games} games on {result.scenario_id!r}, base seed {result.base_seed}")
        aggregates = result.aggregates()
        width = max(len(k) for k in aggregates)
        print(f"{'metric'.ljust(width)}  {'mean':>8} {'min':>6} {'q1':>6} "
              f"{'median':>6} {'q3':>6} {'max':>6}")
        for name, a in aggregates.items():
            print(f"{name.ljust(width)}  {a['mean']:>8.2f} {a['min']:>6} {a['q1']:>6.1f} "
                  f"{a['median']:>6.1f} {a['q3']:>6.1f} {a['max']:>6}")
        if args.out:
            print(f"written: {args.out}/batch.json, {args.out}/batch.csv")
    return 0


def cmd_host(args) -> int:
    if args.content_dir:
        os.environ[content_mod.CONTENT_DIR_ENV] = args.content_dir
    from .server.app import run_server

    data_dir = Path(args.data_dir) if args.data_dir else None
    try:
        run_server(bind=args.bind, data_dir=data_dir)
    except OSError as exc:
        print(f"error: cannot bind server: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_replay(args) -> int:
    path = Path(args.log_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return 1
    try:
        game = _replay_text(text, args.to_turn)
    except CorruptLog as exc:
        print(f"error: corrupt log: {exc}", file=sys.stderr)
        return 1

    summary = {
        "turn": game.world.turn,
        "year": game.world.year,
        "phase": game.world.phase.value,
        "chaos": game.world.chaos,
        "free_talent": game.world.free_talent,
        "state_digest": game.state_digest(),
        "events": len(game.events),
        "orgs": {o: {"talent": s.talent_pool, "funds": s.funds, "influence": s.influence,
                     "techs": sorted(s.unlocked_techs), "deployed": sorted(s.deployed_products)}
                 for o, s in sorted(game.world.orgs.items())},
        "narrative": game.world.narrative[-8:],
    }
    if args.debrief:
        if game.world.phase not in (Phase.DEBRIEF, Phase.FINISHED):
            print("error: --debrief requires a finished game log", file=sys.stderr)
            return 1
        report = game.debrief()
        if args.as_json:
            print(json.dumps({"summary": summary, "debrief": report.to_dict()}))
        else:
            _print_summary(summary)
            print("\nscores:")
            for role, s in sorted(report.scores.items()):
                terms = ", ".join(f"{t['metric']}*{t['weight']}={t['points']}" for t in s["terms"])
                print(f"  {role}: {s['total']}  ({terms})")
            print("\nrevealed private projects:")
            for org, projects in report.private_projects.items():
                for p in projects:
                    print(f"  {org}: {p['kind']} {p['target']} (progress {p['progress']})")
        return 0
    if args.as_json:
        print(json.dumps(summary))
    else:
        _print_summary(summary)
    return 0


def _replay_text(text: str, to_turn: int | None) -> Game:
    from .engine import parse_log

    if to_turn is None:
        return parse_log(text)
    records = []
    for line in text.split("\n"):
        if not line.strip():
            continue
        record = json.loads(line)
        if isinstance(record, dict) and "log_sha256" in record:
            continue  # trailer; prefix replay cannot use it
        event = GameEvent.from_dict(record)
        if event.kind == "turn_resolved" and event.payload["turn"] > to_turn:
            break
        records.append(record)
    return Game.replay(records)


def _print_summary(s: dict) -> None:
    print(f"turn {s['turn']} ({s['year']}), phase {s['phase']}, chaos {s['chaos']}/100, "
          f"free talent {s['free_talent']}")
    print(f"events {s['events']}, digest {s['state_digest'][:16]}…")
    for org, o in s["orgs"].items():
        print(f"  {org}: talent {o['talent']}, funds {o['funds']}, influence {o['influence']}, "
              f"techs {len(o['techs'])}, deployed {len(o['deployed'])}")
    for line in s["narrative"]:
        print(f"  | {line}")


if __name__ == "__main__":
    sys.exit(main())
