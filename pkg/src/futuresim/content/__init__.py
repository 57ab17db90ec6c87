"""Scenario files: the authoring format, loader, and the shipped default.

A scenario file is a JSON object: the Scenario record plus a mandatory
``schema_version`` and an optional ``notes`` list (free-form provenance
text, ignored by the engine). Unknown fields are rejected. ``load_scenario``
followed by ``save_scenario`` is the identity on the canonical form.

Extra scenario files are picked up from the directory named by the
FUTURESIM_CONTENT_DIR environment variable.
"""
from __future__ import annotations

import json
import os
from importlib import resources
from pathlib import Path

from ..errors import InvalidScenario, ParseError, SchemaVersionUnsupported, UnknownScenario
from ..model import SCHEMA_VERSION, Scenario, canonical_json, validate_scenario

CONTENT_DIR_ENV = "FUTURESIM_CONTENT_DIR"
DEFAULT_FILE = "default_scenario.json"

_default_cache: Scenario | None = None


def load_scenario(data: bytes | str) -> Scenario:
    """Parse and fully validate a scenario file."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"scenario file is not UTF-8: {exc}") from exc
    try:
        raw = json.loads(data)
    except ValueError as exc:
        raise ParseError(f"scenario file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("scenario file must be a JSON object")
    if "schema_version" not in raw:
        raise ParseError("scenario file is missing schema_version")
    version = raw.pop("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionUnsupported(f"schema_version {version!r} not supported "
                                       f"(this build reads version {SCHEMA_VERSION})")
    raw.pop("notes", None)
    scenario = Scenario.from_dict(raw)
    violations = validate_scenario(scenario)
    if violations:
        raise InvalidScenario(violations)
    return scenario


def save_scenario(scenario: Scenario, notes: list[str] | None = None) -> str:
    """Serialize to the canonical file form."""
    data = {"schema_version": SCHEMA_VERSION}
    if notes:
        data["notes"] = list(notes)
    data.update(scenario.to_dict())
    return canonical_json(data) + "\n"


def load_scenario_file(path: str | Path) -> Scenario:
    return load_scenario(Path(path).read_bytes())


def default_scenario() -> Scenario:
    """The shipped eight-role scenario; always passes validation."""
    global _default_cache
    if _default_cache is None:
        data = resources.files(__package__).joinpath(DEFAULT_FILE).read_bytes()
        _default_cache = load_scenario(data)
    return _default_cache


def content_dir() -> Path | None:
    value = os.environ.get(CONTENT_DIR_ENV)
    return Path(value) if value else None


def available_scenarios(directory: Path | None = None) -> dict[str, Scenario]:
    """All loadable scenarios: the shipped default plus any in the content dir."""
    found = {"default": default_scenario()}
    directory = directory or content_dir()
    if directory and directory.is_dir():
        for path in sorted(directory.glob("*.json")):
            try:
                scenario = load_scenario_file(path)
            except (ParseError, SchemaVersionUnsupported, InvalidScenario):
                continue  # unloadable files are simply not offered
            found[scenario.id] = scenario
    return found


def scenario_by_id(scenario_id: str, directory: Path | None = None) -> Scenario:
    scenarios = available_scenarios(directory)
    if scenario_id not in scenarios:
        raise UnknownScenario(f"no scenario with id {scenario_id!r}")
    return scenarios[scenario_id]


def reachability_lint(scenario: Scenario) -> dict:
    """Balance check: can some org reach a top-tier tech on expected dice alone?

    Uses the all-talent-on-research greedy policy with expected outcomes:
    num_turns * talent * p expected successes against the cheapest
    prerequisite-closure cost of any max-tier tech.
    """
    by_id = {t.id: t for t in scenario.tech_tree}
    top_tier = max(t.tier for t in scenario.tech_tree)

    def closure_cost(tech_id: str) -> int:
        seen: set[str] = set()
        stack = [tech_id]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            stack.extend(by_id[current].prerequisites)
        return sum(by_id[t].research_cost for t in seen)

    cheapest = min(closure_cost(t.id) for t in scenario.tech_tree if t.tier == top_tier)
    p = scenario.dice.success_probability()
    best_talent = max(o.initial_talent for o in scenario.organizations)
    expected = scenario.num_turns * best_talent * p
    return {"top_tier": top_tier, "cheapest_closure_cost": cheapest,
            "expected_successes": expected, "reachable": expected >= cheapest}
