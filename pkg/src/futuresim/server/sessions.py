"""Live game sessions: lobby, tokens, the command queue, and persistence.

Each session owns one Game and one asyncio lock; every mutation goes
engine-op -> append events to disk -> ack, so an acked command survives a
crash. Event fan-out to connections happens after the ack and is filtered
per role through the engine's visibility rules.

Disk layout under the data dir, one directory per session:
    <sid>/meta.json    tokens, codes, status, scenario
    <sid>/log.jsonl    append-only event log (no trailer while live)
    <sid>/log.digest   sha256 of log.jsonl bytes, written on persist()
"""
from __future__ import annotations

import asyncio
import dataclasses
import json
import os
import secrets
from pathlib import Path

from ..engine import Game, serialize_log, sha256_hex
from ..errors import (
    CodeClaimed,
    CorruptLog,
    GameError,
    InvalidScenario,
    SessionNotRunning,
    SessionRunning,
    UnknownSession,
    UnknownToken,
)
from ..events import GameEvent
from ..model import Scenario, Violation, validate_scenario

DATA_DIR_ENV = "FUTURESIM_DATA_DIR"
PROTOCOL_VERSION = 1

LOBBY = "lobby"
RUNNING = "running"
FINISHED = "finished"


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "./futuresim-data"))


class Session:
    def __init__(self, session_id: str, scenario: Scenario, seed: int, directory: Path):
        self.session_id = session_id
        self.scenario = scenario
        self.seed = seed
        self.directory = directory
        self.facilitator_token = secrets.token_urlsafe(16)
        self.join_codes: dict[str, str] = {
            role.id: secrets.token_urlsafe(8) for role in scenario.roles
        }
        self.players: dict[str, str] = {}  # token -> role id
        self.player_names: dict[str, str] = {}  # role id -> display name
        self.status = LOBBY
        self.game: Game | None = None
        self.lock = asyncio.Lock()
        self.connections: list = []  # managed by the app layer
        self._log_handle = None

    # -- token helpers ------------------------------------------------------

    def role_for_token(self, token: str) -> str | None:
        """Role id for a player token, "facilitator" for the facilitator."""
        if token == self.facilitator_token:
            return "facilitator"
        return self.players.get(token)

    def claimed_roles(self) -> set[str]:
        return set(self.players.values())

    def open_roles(self) -> list[str]:
        return sorted(r.id for r in self.scenario.roles if r.id not in self.claimed_roles())

    def join(self, join_code: str, player_name: str | None) -> tuple[str, str]:
        if self.status != LOBBY:
            raise SessionRunning(f"session {self.session_id} already started")
        role_id = next((r for r, c in self.join_codes.items() if c == join_code), None)
        if role_id is None or role_id in self.claimed_roles():
            raise CodeClaimed("join code unknown or already claimed")
        token = secrets.token_urlsafe(16)
        self.players[token] = role_id
        self.player_names[role_id] = player_name or f"player:{role_id}"
        self.save_meta()
        return token, role_id

    def start(self) -> list[GameEvent]:
        if self.status == RUNNING:
            raise SessionRunning("game already running")
        if self.status == FINISHED:
            raise SessionNotRunning("game is finished")
        self.game = Game.new_game(self.scenario, self.seed, dict(self.player_names))
        self.status = RUNNING
        self.save_meta()
        self.append_events(self.game.events)
        return self.game.events

    # -- persistence ----------------------------------------------------------

    @property
    def meta_path(self) -> Path:
        return self.directory / "meta.json"

    @property
    def log_path(self) -> Path:
        return self.directory / "log.jsonl"

    @property
    def digest_path(self) -> Path:
        return self.directory / "log.digest"

    def save_meta(self) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        meta = {
            "session_id": self.session_id,
            "scenario": self.scenario.to_dict(),
            "seed": self.seed,
            "facilitator_token": self.facilitator_token,
            "join_codes": self.join_codes,
            "players": self.players,
            "player_names": self.player_names,
            "status": self.status,
            "protocol_version": PROTOCOL_VERSION,
        }
        self.meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True))

    def append_events(self, events: list[GameEvent]) -> None:
        """Durable append; the ack contract depends on the flush here."""
        if not events:
            return
        if self._log_handle is None:
            self.directory.mkdir(parents=True, exist_ok=True)
            self._log_handle = open(self.log_path, "a", encoding="utf-8")
        for event in events:
            self._log_handle.write(event.to_line() + "\n")
        self._log_handle.flush()
        os.fsync(self._log_handle.fileno())

    def persist(self) -> None:
        """Write the digest sidecar; called on finish and graceful shutdown."""
        if self._log_handle is not None:
            self._log_handle.flush()
        if self.log_path.exists():
            self.digest_path.write_text(sha256_hex(self.log_path.read_text(encoding="utf-8")))
        self.save_meta()

    def close(self) -> None:
        self.persist()
        if self._log_handle is not None:
            self._log_handle.close()
            self._log_handle = None

    def mark_finished_if_over(self) -> None:
        if self.game is not None and self.game.world.phase.value in ("finished",):
            if self.status != FINISHED:
                self.status = FINISHED
                self.persist()

    def export_log(self) -> str:
        """The downloadable JSONL log with digest trailer."""
        if self.game is None:
            raise SessionNotRunning("no game to export")
        return serialize_log(self.game, trailer=True)


class SessionManager:
    """All sessions on this server; lazily restores persisted ones."""

    def __init__(self, data_dir: Path | None = None):
        self.data_dir = Path(data_dir) if data_dir else default_data_dir()
        self.sessions: dict[str, Session] = {}

    def create(self, scenario: Scenario, seed: int | None,
               overrides: dict | None = None) -> Session:
        if overrides:
            allowed = {"num_turns", "years_per_turn", "start_year"}
            unknown = sorted(set(overrides) - allowed)
            if unknown:
                raise InvalidScenario([Violation("UnknownConfig", ",".join(unknown),
                                                 f"unknown config overrides {unknown}")])
            scenario = dataclasses.replace(scenario, **{k: int(v) for k, v in overrides.items()})
        violations = validate_scenario(scenario)
        if violations:
            raise InvalidScenario(violations)
        session_id = secrets.token_urlsafe(8)
        if seed is None:
            seed = int.from_bytes(secrets.token_bytes(8), "big") >> 1
        session = Session(session_id, scenario, seed, self.data_dir / session_id)
        session.save_meta()
        self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        if session_id in self.sessions:
            return self.sessions[session_id]
        session = self.restore(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def restore(self, session_id: str) -> Session | None:
        """Rebuild a session from disk via replay; verifies the digest sidecar."""
        directory = self.data_dir / session_id
        meta_path = directory / "meta.json"
        if not meta_path.exists():
            return None
        meta = json.loads(meta_path.read_text())
        scenario = Scenario.from_dict(meta["scenario"])
        session = Session(session_id, scenario, meta["seed"], directory)
        session.facilitator_token = meta["facilitator_token"]
        session.join_codes = dict(meta["join_codes"])
        session.players = dict(meta["players"])
        session.player_names = dict(meta["player_names"])
        session.status = meta["status"]
        log_path = session.log_path
        if log_path.exists():
            text = log_path.read_text(encoding="utf-8")
            digest_path = session.digest_path
            if digest_path.exists():
                expected = digest_path.read_text().strip()
                if sha256_hex(text) != expected:
                    raise CorruptLog(f"session {session_id}: log digest mismatch")
            records = []
            for i, line in enumerate(line for line in text.split("\n") if line.strip()):
                try:
                    records.append(json.loads(line))
                except ValueError as exc:
                    raise CorruptLog(f"session {session_id}: log line {i + 1} unreadable") from exc
            session.game = Game.replay(records)
            session.mark_finished_if_over()
        self.sessions[session_id] = session
        return session

    def list_sessions(self) -> list[Session]:
        if self.data_dir.is_dir():
            for entry in sorted(self.data_dir.iterdir()):
                if entry.is_dir() and entry.name not in self.sessions:
                    try:
                        self.restore(entry.name)
                    except (CorruptLog, GameError, KeyError, ValueError):
                        continue  # unreadable sessions are not listed
        return [self.sessions[k] for k in sorted(self.sessions)]

    def shutdown(self) -> None:
        for session in self.sessions.values():
            session.close()

    @staticmethod
    def authorize(session: Session, token: str) -> str:
        role = session.role_for_token(token)
        if role is None:
            raise UnknownToken("invalid token for this session")
        return role
