"""The deterministic tick loop, conversations, event log, and snapshots.

One tick: drain the commands due this tick in arrival order, then let every
agent act in ascending agent-id order, then bump the tick counter. Every
effect lands in the append-only event log under a (tick, seq) key, so the
whole run is determined by (seed, world config, profiles, scripted backend
rules, timed command schedule) and nothing else. Randomness, when anything
wants it, comes from a counter-based generator carried in the state, never
from ambient sources.

Snapshots serialize the full state (minus backend secrets, which live only
in the process environment); loading one and continuing produces the same
future event log as never having stopped.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum

from . import agents as agents_mod
from . import tooluse
from .actions import AgentAction
from .backends import BackendRegistry, CallLog, Caller, HashingEmbedder
from .errors import (
    BackendError,
    CorruptSnapshotError,
    DuplicateIdError,
    NotAdjacentError,
    PlanParseError,
    TownError,
    UnknownAgentError,
    VersionMismatchError,
)
from .memory import new_memory_store
from .planning import ACTIVE, ChainPlanner, Plan, advance
from .tooluse import SkillStore
from .world import (
    Cell,
    WorldConfig,
    WorldMap,
    build_world_map,
    parse_world_config,
    place_building,
    world_config_to_documents,
)

logger = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1
DEFAULT_MAX_TURNS = 8
MAYOR = "mayor"
SYSTEM = "system"

# purely a labeling convention (UI clocks, "day" talk in prompts or logs);
# nothing in the engine keys behavior off it
TICKS_PER_DAY = 24

_M64 = 0xFFFFFFFFFFFFFFFF


class EventKind(str, Enum):
    MOVE = "move"
    SAY = "say"
    USE = "use"
    FEEDBACK = "feedback"
    PURCHASE = "purchase"
    SALARY = "salary"
    PLAN_STEP = "plan_step"
    AGENT_CREATED = "agent_created"
    BUILDING_PLACED = "building_placed"
    MAYOR_SAY = "mayor_say"
    EPISODE_END = "episode_end"
    HEARTBEAT = "heartbeat"
    ERROR = "error"
    IDLE = "idle"


@dataclass(frozen=True)
class Event:
    tick: int
    seq: int
    actor: int | str  # agent id, "mayor", or "system"
    kind: str
    payload: dict

    def to_json(self) -> dict:
        return {
            "tick": self.tick,
            "seq": self.seq,
            "actor": self.actor,
            "kind": self.kind,
            "payload": self.payload,
        }


def event_from_json(raw: dict) -> Event:
    return Event(
        tick=raw["tick"],
        seq=raw["seq"],
        actor=raw["actor"],
        kind=raw["kind"],
        payload=raw["payload"],
    )


def events_to_jsonl(events) -> str:
    """Canonical one-event-per-line serialization; byte-stable across
    processes for identical logs."""
    return "".join(json.dumps(e.to_json(), separators=(",", ":")) + "\n" for e in events)


def events_from_jsonl(text: str) -> list[Event]:
    return [event_from_json(json.loads(line)) for line in text.splitlines() if line.strip()]


@dataclass(frozen=True)
class Command:
    kind: str
    payload: dict
    applies_at: int
    arrival: int


@dataclass
class Conversation:
    participants: tuple  # two agent ids; one may be MAYOR
    turns: list[tuple[int | str, str]] = field(default_factory=list)
    max_turns: int = DEFAULT_MAX_TURNS


def _splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


@dataclass
class Runtime:
    """Everything pluggable that the engine consults but never serializes:
    completion backends, the embedder, registered system variants, and the
    call log that accounts for every completion made."""

    backends: BackendRegistry = field(default_factory=BackendRegistry)
    embedder: object = field(default_factory=HashingEmbedder)
    memory_systems: dict[str, object] = field(default_factory=dict)
    plan_systems: dict[str, object] = field(default_factory=dict)
    call_log: CallLog = field(default_factory=CallLog)
    support_backend_id: str | None = None  # None: the acting agent's own backend

    def register_memory_system(self, system_id: str, factory) -> "Runtime":
        if system_id in self.memory_systems:
            raise DuplicateIdError(f"memory system {system_id!r} already registered")
        self.memory_systems[system_id] = factory
        return self

    def register_plan_system(self, system_id: str, planner) -> "Runtime":
        if system_id in self.plan_systems:
            raise DuplicateIdError(f"plan system {system_id!r} already registered")
        self.plan_systems[system_id] = planner
        return self

    def caller_for(self, backend_id: str, tick: int, agent_id) -> Caller:
        return Caller(self.backends.resolve(backend_id), self.call_log, tick, agent_id)


def default_runtime(
    backends: BackendRegistry | None = None,
    embedder=None,
    support_backend_id: str | None = None,
) -> Runtime:
    rt = Runtime(
        backends=backends or BackendRegistry(),
        embedder=embedder or HashingEmbedder(),
        support_backend_id=support_backend_id,
    )
    rt.register_memory_system("vector-v1", new_memory_store)
    rt.register_plan_system("chain-v1", ChainPlanner())
    return rt


@dataclass
class SimState:
    """The single mutable owner of the town. All writes happen on the
    engine loop; concurrent readers get immutable views between ticks."""

    config: WorldConfig
    world_map: WorldMap
    seed: int = 0
    tick: int = 0
    agents: dict[int, agents_mod.AgentState] = field(default_factory=dict)
    next_agent_id: int = 1
    memories: dict[int, object] = field(default_factory=dict)
    skills: SkillStore = field(default_factory=SkillStore)
    rng_counter: int = 0
    command_queue: list[Command] = field(default_factory=list)
    next_command_arrival: int = 0
    events: list[Event] = field(default_factory=list)
    next_seq: int = 0

    def emit(self, kind: EventKind, actor, payload: dict, tick: int | None = None) -> Event:
        event = Event(
            tick=self.tick if tick is None else tick,
            seq=self.next_seq,
            actor=actor,
            kind=kind.value,
            payload=payload,
        )
        self.events.append(event)
        self.next_seq += 1
        return event

    def rng_next(self) -> int:
        """Counter-based draw: nothing but (seed, counter) feeds it."""
        value = _splitmix64((self.seed & _M64) ^ _splitmix64(self.rng_counter))
        self.rng_counter += 1
        return value

    def agent_by_name(self, name: str) -> agents_mod.AgentState | None:
        for agent in self.agents.values():
            if agent.profile.name == name:
                return agent
        return None


def new_sim_state(config: WorldConfig, world_map: WorldMap, seed: int = 0) -> SimState:
    return SimState(config=config, world_map=world_map, seed=seed)


def queue_command(state: SimState, kind: str, payload: dict, applies_at: int | None = None) -> Command:
    """Commands arriving mid-tick are stamped with the next tick so tick
    atomicity survives concurrent gateway sessions."""
    command = Command(
        kind=kind,
        payload=payload,
        applies_at=state.tick + 1 if applies_at is None else applies_at,
        arrival=state.next_command_arrival,
    )
    state.next_command_arrival += 1
    state.command_queue.append(command)
    return command


# --- mid-tick effects --------------------------------------------------------------


def spawn_agent(state: SimState, runtime: Runtime, profile: agents_mod.AgentProfile, spawn: Cell, tick: int | None = None) -> agents_mod.AgentState:
    agent = agents_mod.create_agent(state, runtime, profile, spawn)
    state.emit(
        EventKind.AGENT_CREATED,
        SYSTEM,
        {
            "agent_id": agent.profile.agent_id,
            "name": agent.profile.name,
            "spawn": list(agent.location),
            "cash": agent.cash,
            "goal": agent.profile.goal,
            "backend": agent.profile.backend_id,
            "memory_system": agent.profile.memory_system_id,
            "plan_system": agent.profile.plan_system_id,
        },
        tick=tick,
    )
    return agent


def apply_place_building(state: SimState, building_id: int, origin: Cell, tick: int | None = None):
    building = state.config.buildings.get(building_id)
    if building is None:
        raise UnknownAgentError(f"no building configured with id {building_id}")
    state.world_map = place_building(state.world_map, building, tuple(origin))
    state.emit(
        EventKind.BUILDING_PLACED,
        SYSTEM,
        {"building_id": building_id, "kind": building.kind, "origin": list(origin)},
        tick=tick,
    )


def build_view(state: SimState, tick: int, self_id: int | None = None) -> agents_mod.WorldView:
    roster = [
        (aid, a.profile.name, a.location, a.status)
        for aid, a in sorted(state.agents.items())
    ]
    return agents_mod.WorldView(
        tick=tick,
        world_map=state.world_map,
        config=state.config,
        roster=roster,
        self_id=self_id,
    )


def _systems_for(state: SimState, runtime: Runtime, agent, tick: int) -> agents_mod.AgentSystems:
    support_caller = None
    support_id = runtime.support_backend_id or agent.profile.backend_id
    if support_id in runtime.backends:
        support_caller = runtime.caller_for(support_id, tick, agent.profile.agent_id)
    return agents_mod.AgentSystems(
        memory=state.memories[agent.profile.agent_id],
        planner=runtime.plan_systems[agent.profile.plan_system_id],
        skills=state.skills,
        support_caller=support_caller,
    )


def _complete_subtask(state: SimState, agent, tick: int) -> None:
    plan = agent.plan
    if plan is None or plan.status != ACTIVE:
        return
    subtask = plan.current_subtask
    advance(plan, state.memories[agent.profile.agent_id], agent.profile.agent_id, tick)
    state.emit(
        EventKind.PLAN_STEP,
        agent.profile.agent_id,
        {"subtask": subtask, "cursor": plan.cursor, "plan_status": plan.status},
        tick=tick,
    )


def _chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def converse(
    state: SimState,
    runtime: Runtime,
    a_id: int | str,
    b_id: int | str,
    opener: str,
    max_turns: int = DEFAULT_MAX_TURNS,
    tick: int | None = None,
) -> Conversation:
    """Run an alternating conversation to completion within this tick.

    The opener is turn one. Each later turn asks the next speaker's
    backend; a reply of END (or a backend failure, logged) ends the talk.
    Every turn is written to both participants' memories. The mayor
    principal may talk from anywhere; agents must be co-located.
    """
    tick = state.tick if tick is None else tick
    conversation = Conversation(participants=(a_id, b_id), max_turns=max_turns)
    is_mayor_chat = a_id == MAYOR or b_id == MAYOR
    a = state.agents.get(a_id) if a_id != MAYOR else None
    b = state.agents.get(b_id) if b_id != MAYOR else None
    if not is_mayor_chat:
        if a is None or b is None:
            raise UnknownAgentError(f"conversation peers {a_id}/{b_id} not live")
        if _chebyshev(a.location, b.location) > 1:
            raise NotAdjacentError(f"agents {a_id} and {b_id} are not co-located")

    def name_of(pid):
        return "the mayor" if pid == MAYOR else state.agents[pid].profile.name

    def record(pid, text):
        if pid != MAYOR:
            state.memories[pid].store(pid, text, tick)

    def say_event(speaker, peer, text, turn):
        kind = EventKind.MAYOR_SAY if speaker == MAYOR else EventKind.SAY
        state.emit(
            kind,
            speaker,
            {"speaker": speaker, "peer": peer, "text": text, "turn": turn, "delivered": True},
            tick=tick,
        )

    for participant in (a, b):
        if participant is not None:
            participant.status = agents_mod.CONVERSING

    try:
        conversation.turns.append((a_id, opener))
        say_event(a_id, b_id, opener, 1)
        transcript = [f"{name_of(a_id)}: {opener}"]
        memory_line = f'{name_of(a_id)} said to {name_of(b_id)}: "{opener}"'
        record(a_id, memory_line)
        record(b_id, memory_line)

        speaker_id, peer_id = b_id, a_id
        while len(conversation.turns) < max_turns:
            if speaker_id == MAYOR:
                break  # the mayor's next word arrives as a new command
            speaker = state.agents[speaker_id]
            memories = state.memories[speaker_id].retrieve(speaker_id, name_of(peer_id), k=3)
            memory_text = "\n".join(f"- {m.text}" for m in memories) or "(none)"
            prompt = (
                f"You are {speaker.profile.summary()}\n"
                f"You are talking with {name_of(peer_id)}.\n"
                f"Relevant memories:\n{memory_text}\n"
                "Conversation so far:\n" + "\n".join(transcript) + "\n"
                "Reply with your next utterance only, or the single word END to stop."
            )
            caller = runtime.caller_for(speaker.profile.backend_id, tick, speaker_id)
            try:
                response = caller.ask(prompt, tag="converse")
            except BackendError as exc:
                state.emit(
                    EventKind.ERROR,
                    speaker_id,
                    {"source": "backend", "error": type(exc).__name__, "detail": str(exc)},
                    tick=tick,
                )
                break
            utterance = response.strip()
            if not utterance or utterance.upper() == "END":
                break
            conversation.turns.append((speaker_id, utterance))
            say_event(speaker_id, peer_id, utterance, len(conversation.turns))
            transcript.append(f"{name_of(speaker_id)}: {utterance}")
            memory_line = f'{name_of(speaker_id)} said to {name_of(peer_id)}: "{utterance}"'
            record(speaker_id, memory_line)
            record(peer_id, memory_line)
            speaker_id, peer_id = peer_id, speaker_id
    finally:
        for participant in (a, b):
            if participant is not None:
                participant.status = agents_mod.IDLE
    return conversation


# --- action application ---------------------------------------------------------------


def _apply_action(state: SimState, runtime: Runtime, agent, action: AgentAction, tick: int) -> None:
    aid = agent.profile.agent_id

    if action.kind == "idle":
        state.emit(EventKind.IDLE, aid, {}, tick=tick)
        return

    if action.kind == "move":
        target = tuple(action.target)
        agent.status = agents_mod.MOVING
        agent.move_target = target
        step = agents_mod.next_step(state.world_map, agent.location, target)
        origin = agent.location
        if step is not None:
            agent.location = step
        state.emit(
            EventKind.MOVE,
            aid,
            {
                "from": list(origin),
                "to": list(agent.location),
                "target": list(target),
            },
            tick=tick,
        )
        if agent.location == target:
            agent.status = agents_mod.IDLE
            agent.move_target = None
            _complete_subtask(state, agent, tick)
        return

    if action.kind == "say":
        peer = state.agents.get(action.peer_id)
        deliverable = (
            peer is not None
            and action.peer_id != aid
            and _chebyshev(agent.location, peer.location) <= 1
        )
        if not deliverable:
            state.emit(
                EventKind.SAY,
                aid,
                {
                    "speaker": aid,
                    "peer": action.peer_id,
                    "text": action.utterance,
                    "turn": 1,
                    "delivered": False,
                },
                tick=tick,
            )
            return
        converse(state, runtime, aid, action.peer_id, action.utterance, tick=tick)
        _complete_subtask(state, agent, tick)
        return

    if action.kind == "use":
        equipment = state.config.equipment.get(action.equipment_id)
        if equipment is None:
            state.emit(
                EventKind.ERROR,
                aid,
                {"source": "action", "error": "UnknownEquipment", "detail": f"id {action.equipment_id}"},
                tick=tick,
            )
            return
        cells = state.world_map.equipment_cells(action.equipment_id)
        agent.status = agents_mod.USING
        try:
            caller = runtime.caller_for(agent.profile.backend_id, tick, aid)
            systems = _systems_for(state, runtime, agent, tick)
            result = tooluse.use_equipment(
                agent,
                equipment,
                action.purpose or action.operation or "",
                skills=state.skills,
                memory_store=state.memories[aid],
                caller=caller,
                support_caller=systems.support_caller,
                economy=state.config.economy_for(action.equipment_id),
                equipment_cells=cells,
                tick=tick,
                initial_operation=action.operation,
            )
        except NotAdjacentError as exc:
            state.emit(
                EventKind.ERROR,
                aid,
                {"source": "action", "error": "NotAdjacentError", "detail": str(exc)},
                tick=tick,
            )
            return
        finally:
            agent.status = agents_mod.IDLE
        state.emit(
            EventKind.USE,
            aid,
            {
                "equipment_id": equipment.id,
                "equipment_kind": equipment.kind,
                "purpose": action.purpose,
                "operation": result.attempts[0][0],
            },
            tick=tick,
        )
        for attempt_no, (operation, feedback) in enumerate(result.attempts, start=1):
            is_last = attempt_no == len(result.attempts)
            state.emit(
                EventKind.FEEDBACK,
                aid,
                {
                    "equipment_id": equipment.id,
                    "equipment_kind": equipment.kind,
                    "purpose": tooluse.normalize_purpose(action.purpose or ""),
                    "operation": operation,
                    "outcome": feedback.outcome_text,
                    "success": feedback.success,
                    "source": feedback.source,
                    "attempt": attempt_no,
                    "skill_stored": bool(result.skill_stored and is_last and feedback.success),
                    "gave_up": bool(result.gave_up and is_last),
                },
                tick=tick,
            )
        if result.purchased_item is not None:
            # cash as of the purchase itself, before any salary from the same use
            cash_after_purchase = result.cash_after - (result.salary_paid or 0)
            state.emit(
                EventKind.PURCHASE,
                aid,
                {
                    "equipment_id": equipment.id,
                    "item": result.purchased_item,
                    "price": result.purchase_price,
                    "cash_after": cash_after_purchase,
                },
                tick=tick,
            )
        if result.salary_paid is not None:
            state.emit(
                EventKind.SALARY,
                aid,
                {"equipment_id": equipment.id, "amount": result.salary_paid, "cash_after": result.cash_after},
                tick=tick,
            )
        if result.final.success:
            _complete_subtask(state, agent, tick)
        return

    raise TownError(f"unknown action kind {action.kind!r}")


def _apply_command(state: SimState, runtime: Runtime, command: Command, tick: int) -> None:
    try:
        if command.kind == "create_agent":
            profile = agents_mod.AgentProfile.from_json(command.payload["profile"])
            spawn = tuple(command.payload["spawn"])
            spawn_agent(state, runtime, profile, spawn, tick=tick)
        elif command.kind == "create_building":
            apply_place_building(
                state, command.payload["building_id"], tuple(command.payload["origin"]), tick=tick
            )
        elif command.kind == "mayor_say":
            target = command.payload["target_agent"]
            agent = (
                state.agents.get(target)
                if isinstance(target, int)
                else state.agent_by_name(str(target))
            )
            if agent is None:
                raise UnknownAgentError(f"mayor_say target {target!r} not live")
            converse(
                state, runtime, MAYOR, agent.profile.agent_id, command.payload["text"],
                max_turns=2, tick=tick,
            )
        else:
            raise TownError(f"unknown command kind {command.kind!r}")
    except TownError as exc:
        state.emit(
            EventKind.ERROR,
            SYSTEM,
            {
                "source": "command",
                "command": command.kind,
                "error": type(exc).__name__,
                "detail": str(exc),
            },
            tick=tick,
        )


def tick(state: SimState, runtime: Runtime) -> list[Event]:
    """Advance the town by one tick; returns the events it produced."""
    new_tick = state.tick + 1
    first_new = len(state.events)
    state.emit(EventKind.HEARTBEAT, SYSTEM, {}, tick=new_tick)

    due = [c for c in state.command_queue if c.applies_at <= new_tick]
    state.command_queue = [c for c in state.command_queue if c.applies_at > new_tick]
    for command in due:  # already in arrival order
        _apply_command(state, runtime, command, new_tick)

    for aid in sorted(state.agents):
        agent = state.agents[aid]
        view = build_view(state, new_tick, self_id=aid)
        try:
            caller = runtime.caller_for(agent.profile.backend_id, new_tick, aid)
            systems = _systems_for(state, runtime, agent, new_tick)
            action = agents_mod.step_agent(agent, view, systems, caller)
        except (BackendError, PlanParseError) as exc:
            state.emit(
                EventKind.ERROR,
                aid,
                {"source": "backend", "error": type(exc).__name__, "detail": str(exc)},
                tick=new_tick,
            )
            action = AgentAction.idle(new_tick)
        except TownError as exc:
            logger.exception("step failed for agent %s", aid)
            state.emit(
                EventKind.ERROR,
                aid,
                {"source": "step", "error": type(exc).__name__, "detail": str(exc)},
                tick=new_tick,
            )
            action = AgentAction.idle(new_tick)
        try:
            _apply_action(state, runtime, agent, action, new_tick)
        except TownError as exc:
            logger.exception("apply failed for agent %s", aid)
            state.emit(
                EventKind.ERROR,
                aid,
                {"source": "apply", "error": type(exc).__name__, "detail": str(exc)},
                tick=new_tick,
            )
    state.tick = new_tick
    return state.events[first_new:]


def run(state: SimState, n_ticks: int, runtime: Runtime, stop_predicate=None) -> list[Event]:
    """Tick until the budget is consumed or the predicate says stop."""
    first_new = len(state.events)
    if n_ticks < 0:
        raise ValueError("n_ticks must be >= 0")
    if stop_predicate is not None and stop_predicate(state):
        return []
    for _ in range(n_ticks):
        tick(state, runtime)
        if stop_predicate is not None and stop_predicate(state):
            break
    return state.events[first_new:]


# --- snapshots ---------------------------------------------------------------------------


def save_snapshot(state: SimState) -> dict:
    equipment, economy, buildings = world_config_to_documents(state.config)
    return {
        "version": SNAPSHOT_VERSION,
        "tick": state.tick,
        "seed": state.seed,
        "rng_counter": state.rng_counter,
        "world": {
            "config": {"equipment": equipment, "economy": economy, "buildings": buildings},
            "map": {
                "width": state.world_map.width,
                "height": state.world_map.height,
                "placements": [
                    {"building_id": p.building_id, "origin": list(p.origin)}
                    for p in state.world_map.placements
                ],
            },
        },
        "agents": {
            "next_id": state.next_agent_id,
            "live": [a.to_json() for a in state.agents.values()],
        },
        "memories": {
            str(aid): store.dump_records(aid) for aid, store in state.memories.items()
        },
        "skills": {str(aid): state.skills.dump(aid) for aid in state.agents},
        "event_count": state.next_seq,
        "commands": {
            "next_arrival": state.next_command_arrival,
            "pending": [
                {
                    "kind": c.kind,
                    "payload": c.payload,
                    "applies_at": c.applies_at,
                    "arrival": c.arrival,
                }
                for c in state.command_queue
            ],
        },
    }


def snapshot_to_json(state: SimState) -> str:
    return json.dumps(save_snapshot(state), separators=(",", ":"))


def load_snapshot(document, runtime: Runtime) -> SimState:
    """Rebuild a state that behaves identically to the saved one.

    Backends are not part of the document; the runtime must carry the same
    registrations the saved run used.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise CorruptSnapshotError(f"snapshot is not valid JSON: {exc.msg}") from exc
    if not isinstance(document, dict):
        raise CorruptSnapshotError("snapshot must be a JSON object")
    version = document.get("version")
    if version is None:
        raise CorruptSnapshotError("snapshot has no version field")
    if version != SNAPSHOT_VERSION:
        raise VersionMismatchError(version, SNAPSHOT_VERSION)
    try:
        world_raw = document["world"]
        config = parse_world_config(
            world_raw["config"]["equipment"],
            world_raw["config"]["economy"],
            world_raw["config"]["buildings"],
        )
        map_raw = world_raw["map"]
        world_map = build_world_map(
            config,
            map_raw["width"],
            map_raw["height"],
            [(p["building_id"], tuple(p["origin"])) for p in map_raw["placements"]],
        )
        state = SimState(
            config=config,
            world_map=world_map,
            seed=document["seed"],
            tick=document["tick"],
            rng_counter=document["rng_counter"],
            next_seq=document["event_count"],
            next_agent_id=document["agents"]["next_id"],
        )
        for raw in document["agents"]["live"]:
            profile = agents_mod.AgentProfile.from_json(raw["profile"])
            agent = agents_mod.AgentState(
                profile=profile,
                location=tuple(raw["location"]),
                cash=raw["cash"],
                plan=Plan.from_json(raw["plan"]) if raw.get("plan") else None,
                status=raw.get("status", agents_mod.IDLE),
                move_target=tuple(raw["move_target"]) if raw.get("move_target") else None,
            )
            state.agents[profile.agent_id] = agent
            factory = runtime.memory_systems[profile.memory_system_id]
            store = factory(runtime.embedder)
            store.restore_records(profile.agent_id, document["memories"].get(str(profile.agent_id), []))
            state.memories[profile.agent_id] = store
            state.skills.restore(profile.agent_id, document["skills"].get(str(profile.agent_id), []))
        commands = document.get("commands", {})
        state.next_command_arrival = commands.get("next_arrival", 0)
        state.command_queue = [
            Command(
                kind=c["kind"],
                payload=c["payload"],
                applies_at=c["applies_at"],
                arrival=c["arrival"],
            )
            for c in commands.get("pending", [])
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptSnapshotError(f"snapshot structure invalid: {exc}") from exc
    return state
