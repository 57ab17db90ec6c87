"""FastAPI application: session lifecycle over HTTP, play over WebSocket.

Wire protocol (JSON frames, both directions): {seq, kind, payload}.
Client -> server: one "hello" handshake frame, then "command" frames.
Server -> client: "welcome", then "event" frames (view-filtered, seq =
event seq for client-side dedup), "view" snapshots, and "ack"/"nack"
responses echoing the command's seq. All rules stay server-side; clients
render only what they are pushed.
"""
from __future__ import annotations

import asyncio
import os
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Query, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .. import content as content_mod
from ..errors import (
    AlreadyRuled,
    CodeClaimed,
    GameError,
    IncompleteAssignment,
    NotFacilitator,
    ParseError,
    SessionNotRunning,
    SessionRunning,
    UnknownScenario,
    UnknownSession,
    UnknownToken,
)
from ..model import Order
from .schemas import (
    CreateSessionRequest,
    CreateSessionResponse,
    JoinRequest,
    JoinResponse,
    ScenarioInfo,
    SessionInfo,
)
from .sessions import FINISHED, PROTOCOL_VERSION, RUNNING, Session, SessionManager

BIND_ENV = "FUTURESIM_BIND_ADDR"
WEB_DIR_ENV = "FUTURESIM_WEB_DIR"

_STATUS_BY_ERROR = {
    UnknownScenario: 404,
    UnknownSession: 404,
    UnknownToken: 403,
    NotFacilitator: 403,
    CodeClaimed: 409,
    SessionRunning: 409,
    SessionNotRunning: 409,
    AlreadyRuled: 409,
}

FACILITATOR_OPS = {"start_game", "advance_phase", "resolve_turn", "rule_free_text",
                   "inject_event", "debrief"}
PLAYER_OPS = {"submit_message", "submit_orders", "get_view"}


class Connection:
    def __init__(self, ws: WebSocket, role: str, last_seen_seq: int):
        self.ws = ws
        self.role = role
        self.last_sent_seq = last_seen_seq
        self.send_lock = asyncio.Lock()

    async def send(self, frame: dict) -> None:
        async with self.send_lock:
            await self.ws.send_json(frame)


def create_app(data_dir: Path | None = None) -> FastAPI:
    manager = SessionManager(data_dir)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        manager.shutdown()  # graceful shutdown persists every session

    app = FastAPI(title="futuresim", lifespan=lifespan)
    app.state.manager = manager

    @app.exception_handler(GameError)
    async def game_error_handler(request: Request, exc: GameError):
        status = _STATUS_BY_ERROR.get(type(exc), 400)
        return JSONResponse(status_code=status,
                            content={"error": {"code": exc.code, "message": str(exc)}})

    # -- content ------------------------------------------------------------

    @app.get("/api/scenarios", response_model=list[ScenarioInfo])
    async def list_scenarios():
        out = []
        for scenario in content_mod.available_scenarios().values():
            out.append(ScenarioInfo(
                id=scenario.id, title=scenario.title, num_turns=scenario.num_turns,
                start_year=scenario.start_year, years_per_turn=scenario.years_per_turn,
                roles=[r.id for r in scenario.roles],
                organizations=[o.id for o in scenario.organizations]))
        return out

    # -- session lifecycle -----------------------------------------------------

    @app.post("/api/sessions", response_model=CreateSessionResponse)
    async def create_session(req: CreateSessionRequest):
        scenario = content_mod.scenario_by_id(req.scenario_id)
        session = manager.create(scenario, req.seed, req.config)
        return CreateSessionResponse(session_id=session.session_id,
                                     facilitator_token=session.facilitator_token,
                                     join_codes=session.join_codes)

    @app.get("/api/sessions", response_model=list[SessionInfo])
    async def list_sessions():
        return [_session_info(s) for s in manager.list_sessions()]

    @app.get("/api/sessions/{session_id}", response_model=SessionInfo)
    async def get_session(session_id: str):
        return _session_info(manager.get(session_id))

    @app.post("/api/sessions/{session_id}/join", response_model=JoinResponse)
    async def join_session(session_id: str, req: JoinRequest):
        session = manager.get(session_id)
        async with session.lock:
            token, role_id = session.join(req.join_code, req.player_name)
        role = session.scenario.role(role_id)
        await _broadcast_lobby(session)
        return JoinResponse(
            player_token=token, role=role_id, title=role.title, briefing=role.briefing,
            organization=role.organization, scenario=_public_scenario(session))

    @app.get("/api/sessions/{session_id}/log")
    async def download_log(session_id: str, token: str = Query(...)):
        session = manager.get(session_id)
        role = SessionManager.authorize(session, token)
        if role != "facilitator" and session.status != FINISHED:
            raise NotFacilitator("players may export the log once the game is finished")
        return PlainTextResponse(session.export_log(), media_type="application/x-ndjson")

    # -- websocket ---------------------------------------------------------------

    @app.websocket("/api/sessions/{session_id}/ws")
    async def websocket_endpoint(ws: WebSocket, session_id: str):
        await ws.accept()
        try:
            session = manager.get(session_id)
        except UnknownSession:
            await ws.send_json(_error_frame("UnknownSession", f"no session {session_id!r}"))
            await ws.close(code=4404)
            return
        try:
            hello = await ws.receive_json()
        except WebSocketDisconnect:
            return
        if not isinstance(hello, dict) or hello.get("kind") != "hello":
            await ws.send_json(_error_frame("BadHandshake", "first frame must be kind=hello"))
            await ws.close(code=4400)
            return
        payload = hello.get("payload") or {}
        if payload.get("protocol_version") != PROTOCOL_VERSION:
            await ws.send_json(_error_frame(
                "ProtocolMismatch", f"server speaks protocol {PROTOCOL_VERSION}"))
            await ws.close(code=4400)
            return
        try:
            role = SessionManager.authorize(session, payload.get("token") or "")
        except UnknownToken as exc:
            await ws.send_json(_error_frame(exc.code, str(exc)))
            await ws.close(code=4403)
            return

        conn = Connection(ws, role, int(payload.get("last_seen_seq", -1)))
        session.connections.append(conn)
        try:
            await conn.send({"seq": None, "kind": "welcome", "payload": {
                "protocol_version": PROTOCOL_VERSION,
                "role": role,
                "session": _session_info(session).model_dump(),
                "scenario": _public_scenario(session),
            }})
            if session.game is not None:
                await _push_to(session, conn)
            while True:
                frame = await ws.receive_json()
                await _handle_frame(session, conn, frame)
        except WebSocketDisconnect:
            pass
        finally:
            if conn in session.connections:
                session.connections.remove(conn)

    # -- optional static frontend ---------------------------------------------------

    web_dir = os.environ.get(WEB_DIR_ENV)
    if web_dir and Path(web_dir).is_dir():
        app.mount("/", StaticFiles(directory=web_dir, html=True), name="web")

    return app


def _session_info(session: Session) -> SessionInfo:
    return SessionInfo(
        session_id=session.session_id,
        scenario_id=session.scenario.id,
        scenario_title=session.scenario.title,
        status=session.status,
        open_roles=session.open_roles(),
        turn=session.game.world.turn if session.game else None,
        phase=session.game.world.phase.value if session.game else None,
    )


def _public_scenario(session: Session) -> dict:
    """Scenario content safe for any participant: everything but join secrets."""
    data = session.scenario.to_dict()
    data["role_directory"] = {r.id: {"title": r.title, "organization": r.organization}
                              for r in session.scenario.roles}
    return data


def _error_frame(code: str, message: str) -> dict:
    return {"seq": None, "kind": "error", "payload": {"code": code, "message": message}}


async def _broadcast_lobby(session: Session) -> None:
    frame = {"seq": None, "kind": "lobby", "payload": {
        "status": session.status,
        "open_roles": session.open_roles(),
        "claimed": sorted(session.claimed_roles()),
    }}
    for conn in list(session.connections):
        try:
            await conn.send(frame)
        except Exception:
            pass  # dead connections are reaped by their own receive loop


async def _push_to(session: Session, conn: Connection) -> None:
    """Send everything newer than the connection's cursor, then a view snapshot."""
    game = session.game
    if game is None:
        return
    org_id = None
    if conn.role != "facilitator":
        org_id = game.scenario.role(conn.role).organization
    for event in game.events:
        if event.seq <= conn.last_sent_seq:
            continue
        if conn.role == "facilitator" or event.visibility.admits(conn.role, org_id):
            await conn.send({"seq": event.seq, "kind": "event", "payload": event.to_dict()})
        conn.last_sent_seq = event.seq
    view = game.player_view(conn.role)
    await conn.send({"seq": game.next_seq - 1, "kind": "view", "payload": view.to_dict()})


async def _broadcast(session: Session) -> None:
    for conn in list(session.connections):
        try:
            await _push_to(session, conn)
        except Exception:
            pass


async def _handle_frame(session: Session, conn: Connection, frame: dict) -> None:
    if not isinstance(frame, dict) or frame.get("kind") != "command":
        await conn.send(_error_frame("BadFrame", "expected kind=command"))
        return
    seq = frame.get("seq")
    payload = frame.get("payload") or {}
    op = payload.get("op")
    args = payload.get("args") or {}
    try:
        result = await _execute(session, conn.role, op, args)
    except GameError as exc:
        await conn.send({"seq": seq, "kind": "nack",
                         "payload": {"ok": False, "op": op,
                                     "error": {"code": exc.code, "message": str(exc)}}})
        return
    except Exception as exc:  # defensive: report, do not kill the socket
        await conn.send({"seq": seq, "kind": "nack",
                         "payload": {"ok": False, "op": op,
                                     "error": {"code": "InternalError", "message": str(exc)}}})
        return
    await conn.send({"seq": seq, "kind": "ack",
                     "payload": {"ok": True, "op": op, "result": result}})
    await _broadcast(session)
    if op == "debrief" and "report" in result:
        # the reveal: every participant receives the unredacted report
        frame = {"seq": None, "kind": "debrief", "payload": result["report"]}
        for other in list(session.connections):
            try:
                await other.send(frame)
            except Exception:
                pass


async def _execute(session: Session, role: str, op: str, args: dict) -> dict:
    """Run one command under the session's queue lock; append before returning."""
    if op in FACILITATOR_OPS and role != "facilitator":
        raise NotFacilitator(f"{op} is a facilitator operation")
    if op not in FACILITATOR_OPS and op not in PLAYER_OPS:
        raise ParseError(f"unknown op {op!r}")

    async with session.lock:
        if op == "start_game":
            if session.open_roles():
                raise IncompleteAssignment(f"open roles remain: {session.open_roles()}")
            session.start()
            return {"status": session.status}

        game = session.game
        if op == "get_view":
            if game is None:
                return {"view": None, "status": session.status}
            return {"view": game.player_view(role).to_dict()}

        if game is None or session.status != RUNNING:
            if not (op == "debrief" and session.status == FINISHED and game is not None):
                raise SessionNotRunning(f"session is {session.status}")

        before = len(game.events)
        result: dict = {}
        if op == "submit_message":
            game.submit_message(role, list(args.get("to", [])), str(args.get("text", "")))
        elif op == "submit_orders":
            orders = [Order.from_dict(d) for d in args.get("orders", [])]
            game.submit_orders(role, orders)
        elif op == "advance_phase":
            report = game.advance_phase()
            if report is not None:
                result["report"] = report.to_dict()
        elif op == "resolve_turn":
            result["report"] = game.resolve_turn().to_dict()
        elif op == "rule_free_text":
            game.facilitator_rule(str(args.get("order_ref", "")),
                                  str(args.get("narrative", "")),
                                  args.get("deltas") or {},
                                  args.get("headlines") or [])
        elif op == "inject_event":
            game.inject_world_event(str(args.get("name", "event")),
                                    str(args.get("narrative", "")),
                                    int(args.get("chaos_delta", 0)),
                                    args.get("effects") or [])
        elif op == "debrief":
            result["report"] = game.debrief().to_dict()

        new_events = game.events[before:]
        session.append_events(new_events)  # durability before the ack
        session.mark_finished_if_over()
        result["events_appended"] = len(new_events)
        result["phase"] = game.world.phase.value
        result["turn"] = game.world.turn
        return result


def run_server(bind: str | None = None, data_dir: Path | None = None) -> None:
    """Blocking uvicorn host; used by the CLI `host` subcommand."""
    import uvicorn

    bind = bind or os.environ.get(BIND_ENV, "127.0.0.1:8000")
    host, _, port = bind.rpartition(":")
    app = create_app(data_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
