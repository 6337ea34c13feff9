"""Websocket control plane: sessions, commands in, events and state out.

One JSON envelope per websocket text frame:

    client -> server   {"msg_id": "<client id>", "kind": "<command>", "payload": {...}}
    server -> client   {"msg_id": "<same id>",  "kind": "ack"|"error", "payload": {...}}
    server -> client   {"msg_id": null, "kind": "event", "payload": {<event>}}   (push)

Command kinds: hello {role, token}, create_agent {profile, spawn},
create_building {building_id, origin}, mayor_say {target_agent, text}
(mayor role only), pause, resume, set_speed {ticks_per_sec}, snapshot,
subscribe {streams, resume_from {tick, seq}}.

Every command gets exactly one reply with its msg_id. Engine commands are
validated against the live state, queued for the next tick, and acked with
the tick they will apply at; the engine's behavior depends only on that
(command, applies_at) schedule, never on session timing, which is what the
headless schedule replay in the test suite verifies. Events are pushed to
subscribed sessions in (tick, seq) order, at-least-once: clients dedup by
sequence number and can reconnect with resume_from to replay from the log.
Sessions that stop draining their buffer are disconnected (close 1013).

Auth is a single static token, passed as a ?token= query parameter or in
the hello payload (run behind a proxy for TLS). At most one session holds
the mayor role at a time.
"""

from __future__ import annotations

import asyncio
import json
import logging
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from starlette.staticfiles import StaticFiles

from . import agents as agents_mod
from . import engine
from .errors import TownError
from .world import place_building

logger = logging.getLogger(__name__)

OBSERVER = "observer"
MAYOR_ROLE = "mayor"

ENGINE_COMMANDS = ("create_agent", "create_building", "mayor_say")
CONTROL_COMMANDS = ("hello", "pause", "resume", "set_speed", "snapshot", "subscribe")

MIN_SPEED = 0.1


def _dumps(doc) -> str:
    return json.dumps(doc, separators=(",", ":"))


class Session:
    def __init__(self, session_id: int, buffer_limit: int):
        self.session_id = session_id
        self.role = OBSERVER
        self.authed = False
        self.subscriptions: set[str] = set()
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=buffer_limit)
        self.kill = asyncio.Event()  # set when the session must be dropped


def snapshot_state(state: engine.SimState, runtime: engine.Runtime | None = None) -> dict:
    """Everything a cold-starting client needs to render the town."""
    placements = []
    for p in state.world_map.placements:
        building = state.config.buildings[p.building_id]
        placements.append(
            {"building_id": p.building_id, "kind": building.kind, "origin": list(p.origin)}
        )
    buildings = {
        str(b.id): {
            "kind": b.kind,
            "assets": b.assets,
            "price": b.price,
            "blocks": [list(row) for row in b.blocks],
            "equipment": [
                {"cell": [dx, dy], "equipment_id": eq_id} for (dx, dy), eq_id in b.equipment_slots
            ],
        }
        for b in state.config.buildings.values()
    }
    agents = [
        {
            "agent_id": aid,
            "name": a.profile.name,
            "location": list(a.location),
            "status": a.status,
            "cash": a.cash,
            "goal": a.profile.goal,
        }
        for aid, a in sorted(state.agents.items())
    ]
    doc = {
        "tick": state.tick,
        "day": state.tick // engine.TICKS_PER_DAY,
        "map": {
            "width": state.world_map.width,
            "height": state.world_map.height,
            "placements": placements,
        },
        "buildings": buildings,
        "agents": agents,
        "event_count": state.next_seq,
    }
    if runtime is not None:
        # populates the creation-form drop-downs
        doc["options"] = {
            "backends": runtime.backends.ids(),
            "memory_systems": sorted(runtime.memory_systems),
            "plan_systems": sorted(runtime.plan_systems),
        }
    return doc


class GatewayServer:
    """One simulation per process; many concurrent sessions."""

    def __init__(
        self,
        state: engine.SimState,
        runtime: engine.Runtime,
        *,
        token: str | None = None,
        ticks_per_sec: float = 2.0,
        max_speed: float = 200.0,
        buffer_limit: int = 256,
        ui_dir: str | Path | None = None,
        start_paused: bool = False,
    ):
        self.state = state
        self.runtime = runtime
        self.token = token
        self.ticks_per_sec = ticks_per_sec
        self.max_speed = max_speed
        self.buffer_limit = buffer_limit
        self.paused = start_paused
        self.schedule: list[dict] = []  # every queued engine command, for replay
        self._sessions: dict[int, Session] = {}
        self._next_session_id = 1
        self._mayor_session: int | None = None
        self._ticker_task: asyncio.Task | None = None

        @asynccontextmanager
        async def lifespan(app):
            self._ticker_task = asyncio.get_running_loop().create_task(self._ticker())
            try:
                yield
            finally:
                self._ticker_task.cancel()

        self.app = FastAPI(lifespan=lifespan)
        self.app.websocket("/ws")(self._ws_endpoint)
        if ui_dir is not None and Path(ui_dir).is_dir():
            self.app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    # --- engine loop -------------------------------------------------------------

    async def _ticker(self):
        while True:
            await asyncio.sleep(1.0 / self.ticks_per_sec)
            if self.paused:
                continue
            events = engine.tick(self.state, self.runtime)
            self.broadcast_events(events)

    def broadcast_events(self, events) -> None:
        for session in list(self._sessions.values()):
            if "events" not in session.subscriptions:
                continue
            for event in events:
                self._enqueue(session, {"msg_id": None, "kind": "event", "payload": event.to_json()})

    def _enqueue(self, session: Session, message: dict) -> None:
        if session.kill.is_set():
            return
        try:
            session.queue.put_nowait(message)
        except asyncio.QueueFull:
            logger.warning("session %s overflowed its buffer, dropping", session.session_id)
            session.kill.set()

    # --- sessions ----------------------------------------------------------------

    def _open_session(self, token_param: str | None) -> Session:
        session = Session(self._next_session_id, self.buffer_limit)
        self._next_session_id += 1
        session.authed = self._token_ok(token_param)
        self._sessions[session.session_id] = session
        return session

    def _drop_session(self, session: Session) -> None:
        self._sessions.pop(session.session_id, None)
        if self._mayor_session == session.session_id:
            self._mayor_session = None

    def _token_ok(self, token: str | None) -> bool:
        return self.token is None or token == self.token

    async def _ws_endpoint(self, websocket: WebSocket):
        await websocket.accept()
        session = self._open_session(websocket.query_params.get("token"))

        async def pump_out():
            while True:
                message = await session.queue.get()
                await websocket.send_text(_dumps(message))

        pump = asyncio.create_task(pump_out())
        killed = asyncio.create_task(session.kill.wait())
        try:
            while True:
                receive = asyncio.create_task(websocket.receive_text())
                done, _pending = await asyncio.wait(
                    {receive, killed}, return_when=asyncio.FIRST_COMPLETED
                )
                if killed in done:
                    receive.cancel()
                    await websocket.close(code=1013, reason="slow consumer")
                    break
                raw = receive.result()
                reply = self.handle_envelope(session, raw)
                self._enqueue(session, reply)
        except WebSocketDisconnect:
            pass
        finally:
            pump.cancel()
            killed.cancel()
            self._drop_session(session)

    # --- envelope handling ----------------------------------------------------------

    def handle_envelope(self, session: Session, raw: str) -> dict:
        """Synchronous on purpose: each envelope is handled atomically with
        respect to the tick loop, so command stamping is race-free."""
        try:
            envelope = json.loads(raw)
        except json.JSONDecodeError:
            return self._error(None, "ValidationError", "envelope is not valid JSON")
        if not isinstance(envelope, dict):
            return self._error(None, "ValidationError", "envelope must be an object")
        msg_id = envelope.get("msg_id")
        kind = envelope.get("kind")
        payload = envelope.get("payload") or {}
        if not isinstance(msg_id, (str, int)) :
            return self._error(None, "ValidationError", "msg_id must be a string or number")
        if kind == "hello":
            return self._handle_hello(session, msg_id, payload)
        if not session.authed:
            return self._error(msg_id, "AuthError", "authenticate with a token first")
        try:
            if kind in ENGINE_COMMANDS:
                return self._handle_engine_command(session, msg_id, kind, payload)
            if kind == "pause":
                self.paused = True
                return self._ack(msg_id, {"tick": self.state.tick, "paused": True})
            if kind == "resume":
                self.paused = False
                return self._ack(msg_id, {"tick": self.state.tick, "paused": False})
            if kind == "set_speed":
                speed = float(payload.get("ticks_per_sec", self.ticks_per_sec))
                self.ticks_per_sec = max(MIN_SPEED, min(self.max_speed, speed))
                return self._ack(msg_id, {"ticks_per_sec": self.ticks_per_sec})
            if kind == "snapshot":
                doc = snapshot_state(self.state, self.runtime)
                doc["paused"] = self.paused
                doc["ticks_per_sec"] = self.ticks_per_sec
                return self._ack(msg_id, doc)
            if kind == "subscribe":
                return self._handle_subscribe(session, msg_id, payload)
        except (TownError, TypeError, ValueError, KeyError) as exc:
            return self._error(msg_id, "ValidationError", f"{type(exc).__name__}: {exc}")
        return self._error(msg_id, "ValidationError", f"unknown command kind {kind!r}")

    def _handle_hello(self, session: Session, msg_id, payload: dict) -> dict:
        if not session.authed:
            session.authed = self._token_ok(payload.get("token"))
        if not session.authed:
            return self._error(msg_id, "AuthError", "bad or missing token")
        role = payload.get("role", OBSERVER)
        if role == MAYOR_ROLE:
            if self._mayor_session is not None and self._mayor_session != session.session_id:
                return self._error(msg_id, "RoleError", "a mayor session is already connected")
            self._mayor_session = session.session_id
            session.role = MAYOR_ROLE
        elif role == OBSERVER:
            session.role = OBSERVER
        else:
            return self._error(msg_id, "ValidationError", f"unknown role {role!r}")
        return self._ack(msg_id, {"role": session.role, "tick": self.state.tick})

    def _handle_engine_command(self, session: Session, msg_id, kind: str, payload: dict) -> dict:
        if kind == "mayor_say" and session.role != MAYOR_ROLE:
            return self._error(msg_id, "RoleError", "mayor_say requires the mayor role")
        try:
            self._validate_engine_command(kind, payload)
        except (TownError, TypeError, ValueError, KeyError) as exc:
            return self._error(msg_id, "ValidationError", f"{type(exc).__name__}: {exc}")
        command = engine.queue_command(self.state, kind, payload)
        self.schedule.append(
            {"kind": kind, "payload": payload, "applies_at": command.applies_at}
        )
        return self._ack(msg_id, {"applies_at_tick": command.applies_at})

    def _validate_engine_command(self, kind: str, payload: dict) -> None:
        if kind == "create_agent":
            profile = agents_mod.AgentProfile.from_json(payload["profile"])
            agents_mod.validate_new_agent(self.state, self.runtime, profile, tuple(payload["spawn"]))
        elif kind == "create_building":
            building = self.state.config.buildings.get(payload["building_id"])
            if building is None:
                raise TownError(f"no building configured with id {payload['building_id']}")
            place_building(self.state.world_map, building, tuple(payload["origin"]))
        elif kind == "mayor_say":
            target = payload["target_agent"]
            agent = (
                self.state.agents.get(target)
                if isinstance(target, int)
                else self.state.agent_by_name(str(target))
            )
            if agent is None:
                raise TownError(f"no live agent {target!r}")
            if not str(payload.get("text", "")).strip():
                raise TownError("mayor_say needs non-empty text")

    def _handle_subscribe(self, session: Session, msg_id, payload: dict) -> dict:
        streams = payload.get("streams", [])
        if not isinstance(streams, list) or any(s != "events" for s in streams):
            return self._error(msg_id, "ValidationError", "known streams: ['events']")
        session.subscriptions = set(streams)
        resume_from = payload.get("resume_from")
        replayed = 0
        if resume_from is not None and "events" in session.subscriptions:
            mark = (resume_from.get("tick", -1), resume_from.get("seq", -1))
            for event in self.state.events:
                if (event.tick, event.seq) > mark:
                    self._enqueue(
                        session, {"msg_id": None, "kind": "event", "payload": event.to_json()}
                    )
                    replayed += 1
        return self._ack(msg_id, {"streams": sorted(session.subscriptions), "replayed": replayed})

    @staticmethod
    def _ack(msg_id, payload: dict) -> dict:
        return {"msg_id": msg_id, "kind": "ack", "payload": payload}

    @staticmethod
    def _error(msg_id, error: str, detail: str) -> dict:
        return {"msg_id": msg_id, "kind": "error", "payload": {"error": error, "detail": detail}}


def make_app(state, runtime, **kwargs) -> FastAPI:
    return GatewayServer(state, runtime, **kwargs).app
