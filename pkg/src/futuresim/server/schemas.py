"""Pydantic request/response models for the HTTP surface."""
from __future__ import annotations

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    scenario_id: str = "default"
    seed: int | None = None
    config: dict | None = None  # optional overrides: num_turns, years_per_turn, start_year


class CreateSessionResponse(BaseModel):
    session_id: str
    facilitator_token: str
    join_codes: dict[str, str]  # role id -> code, for the facilitator to hand out


class SessionInfo(BaseModel):
    session_id: str
    scenario_id: str
    scenario_title: str
    status: str
    open_roles: list[str]
    turn: int | None = None
    phase: str | None = None


class JoinRequest(BaseModel):
    join_code: str
    player_name: str | None = None


class JoinResponse(BaseModel):
    player_token: str
    role: str
    title: str
    briefing: str
    organization: str
    scenario: dict  # full public content: tech tree, deck, role directory


class ScenarioInfo(BaseModel):
    id: str
    title: str
    num_turns: int
    start_year: int
    years_per_turn: int
    roles: list[str]
    organizations: list[str]


class ErrorBody(BaseModel):
    code: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorBody = Field(description="stable machine-readable failure")
