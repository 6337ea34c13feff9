"""Task-based evaluation: goal predicates, episodes, and pass-rate reports.

A task file names a world, the agents to spawn (exactly one tagged as the
subject under evaluation), a goal predicate tree, a tick budget, and the
seeds to run. An episode passes when the goal holds within the budget. The
pass rate over episodes is the whole metric: predicates are evaluated
purely against the final state and the event log, with zero model calls,
so no rating model or human judgement enters the score.

Predicate JSON, by example:

    {"kind": "cash_at_least", "agent": "Ada", "amount": 80}
    {"kind": "building_exists", "building_kind": "store"}
    {"kind": "skill_learned", "agent": "Ada", "equipment_kind": "counter",
     "purpose": "buy chicken"}
    {"kind": "memory_contains", "agent": "Ada", "substring": "chicken"}
    {"kind": "event_occurred", "event_kind": "purchase",
     "payload_match": {"item": "chicken"}}
    {"kind": "all", "of": [...]}   {"kind": "any", "of": [...]}
    {"kind": "not", "of": {...}}   {"kind": "within", "ticks": 30, "of": {...}}
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import engine
from .agents import AgentProfile
from .backends import BackendRegistry, RemoteBackend, ScriptedBackend
from .errors import BackendError, ConfigError, UnknownAgentError
from .planning import _ACTION_RE  # same ACTION line convention as the decide module
from .tooluse import normalize_purpose
from .world import WorldConfig, build_world_map, parse_world_config

SUBJECT = "subject"
BASELINE = "baseline"
PARTICIPANT = "participant"
MAYOR_MODE = "mayor"


# --- goal predicates ------------------------------------------------------------------


@dataclass(frozen=True)
class CashAtLeast:
    agent: str
    amount: int


@dataclass(frozen=True)
class BuildingExists:
    building_kind: str


@dataclass(frozen=True)
class SkillLearned:
    agent: str
    equipment_kind: str
    purpose: str


@dataclass(frozen=True)
class MemoryContains:
    agent: str
    substring: str


@dataclass(frozen=True)
class EventOccurred:
    event_kind: str
    payload_match: tuple = ()  # ((key, value), ...)


@dataclass(frozen=True)
class All:
    of: tuple


@dataclass(frozen=True)
class Any_:
    of: tuple


@dataclass(frozen=True)
class Not:
    of: object


@dataclass(frozen=True)
class Within:
    ticks: int
    of: object


def predicate_from_json(raw: dict):
    kind = raw.get("kind")
    if kind == "cash_at_least":
        return CashAtLeast(agent=raw["agent"], amount=raw["amount"])
    if kind == "building_exists":
        return BuildingExists(building_kind=raw["building_kind"])
    if kind == "skill_learned":
        return SkillLearned(
            agent=raw["agent"],
            equipment_kind=raw["equipment_kind"],
            purpose=raw["purpose"],
        )
    if kind == "memory_contains":
        return MemoryContains(agent=raw["agent"], substring=raw["substring"])
    if kind == "event_occurred":
        return EventOccurred(
            event_kind=raw["event_kind"],
            payload_match=tuple(sorted(raw.get("payload_match", {}).items())),
        )
    if kind == "all":
        return All(of=tuple(predicate_from_json(p) for p in raw["of"]))
    if kind == "any":
        return Any_(of=tuple(predicate_from_json(p) for p in raw["of"]))
    if kind == "not":
        return Not(of=predicate_from_json(raw["of"]))
    if kind == "within":
        return Within(ticks=raw["ticks"], of=predicate_from_json(raw["of"]))
    raise ConfigError(f"unknown predicate kind {raw.get('kind')!r}")


def predicate_to_json(p) -> dict:
    if isinstance(p, CashAtLeast):
        return {"kind": "cash_at_least", "agent": p.agent, "amount": p.amount}
    if isinstance(p, BuildingExists):
        return {"kind": "building_exists", "building_kind": p.building_kind}
    if isinstance(p, SkillLearned):
        return {
            "kind": "skill_learned",
            "agent": p.agent,
            "equipment_kind": p.equipment_kind,
            "purpose": p.purpose,
        }
    if isinstance(p, MemoryContains):
        return {"kind": "memory_contains", "agent": p.agent, "substring": p.substring}
    if isinstance(p, EventOccurred):
        return {
            "kind": "event_occurred",
            "event_kind": p.event_kind,
            "payload_match": dict(p.payload_match),
        }
    if isinstance(p, All):
        return {"kind": "all", "of": [predicate_to_json(x) for x in p.of]}
    if isinstance(p, Any_):
        return {"kind": "any", "of": [predicate_to_json(x) for x in p.of]}
    if isinstance(p, Not):
        return {"kind": "not", "of": predicate_to_json(p.of)}
    if isinstance(p, Within):
        return {"kind": "within", "ticks": p.ticks, "of": predicate_to_json(p.of)}
    raise ConfigError(f"not a predicate: {p!r}")


def _agent_id_from_log(log, name: str) -> int | None:
    for event in log:
        if event.kind == "agent_created" and event.payload.get("name") == name:
            return event.payload["agent_id"]
    return None


def _resolve_agent(state, log, name: str) -> int:
    for aid, agent in state.agents.items():
        if agent.profile.name == name:
            return aid
    aid = _agent_id_from_log(log, name)
    if aid is None:
        raise UnknownAgentError(f"goal predicate names unknown agent {name!r}")
    return aid


def _cash_as_of(state, log, name: str, as_of: int) -> int:
    aid = _resolve_agent(state, log, name)
    cash = None
    for event in log:
        if event.tick > as_of:
            break
        if event.kind == "agent_created" and event.payload.get("agent_id") == aid:
            cash = event.payload["cash"]
        elif event.actor == aid and event.kind in ("purchase", "salary"):
            cash = event.payload["cash_after"]
    if cash is None:
        raise UnknownAgentError(f"agent {name!r} not created by tick {as_of}")
    return cash


def evaluate_predicate(p, state, log, as_of: int | None = None) -> bool:
    """Structural recursion over the predicate tree. as_of=None reads the
    final state; an explicit tick replays the answer from the event log.
    Never touches a backend."""
    if isinstance(p, All):
        return all(evaluate_predicate(x, state, log, as_of) for x in p.of)
    if isinstance(p, Any_):
        return any(evaluate_predicate(x, state, log, as_of) for x in p.of)
    if isinstance(p, Not):
        return not evaluate_predicate(p.of, state, log, as_of)
    if isinstance(p, Within):
        horizon = min(p.ticks, state.tick)
        return any(
            evaluate_predicate(p.of, state, log, as_of=t) for t in range(horizon + 1)
        )
    if isinstance(p, CashAtLeast):
        if as_of is None:
            aid = _resolve_agent(state, log, p.agent)
            return state.agents[aid].cash >= p.amount
        return _cash_as_of(state, log, p.agent, as_of) >= p.amount
    if isinstance(p, BuildingExists):
        if as_of is None:
            return any(
                state.config.buildings[pl.building_id].kind == p.building_kind
                for pl in state.world_map.placements
            )
        return any(
            e.kind == "building_placed"
            and e.tick <= as_of
            and e.payload.get("kind") == p.building_kind
            for e in log
        )
    if isinstance(p, SkillLearned):
        aid = _resolve_agent(state, log, p.agent)
        want = normalize_purpose(p.purpose)
        if as_of is None:
            return any(
                s.equipment_kind == p.equipment_kind and s.purpose == want
                for s in state.skills.skills_for(aid)
            )
        return any(
            e.kind == "feedback"
            and e.tick <= as_of
            and e.actor == aid
            and e.payload.get("skill_stored")
            and e.payload.get("equipment_kind") == p.equipment_kind
            and normalize_purpose(e.payload.get("purpose", "")) == want
            for e in log
        )
    if isinstance(p, MemoryContains):
        aid = _resolve_agent(state, log, p.agent)
        store = state.memories.get(aid)
        if store is None:
            return False
        return any(
            p.substring in r.text and (as_of is None or r.tick <= as_of)
            for r in store.records_for(aid)
        )
    if isinstance(p, EventOccurred):
        for event in log:
            if event.kind != p.event_kind:
                continue
            if as_of is not None and event.tick > as_of:
                continue
            if all(event.payload.get(k) == v for k, v in p.payload_match):
                return True
        return False
    raise ConfigError(f"not a predicate: {p!r}")


# --- task specs -----------------------------------------------------------------------


@dataclass(frozen=True)
class TaskAgent:
    profile: AgentProfile
    spawn: tuple[int, int]
    role: str  # SUBJECT or BASELINE
    spawn_pool: tuple[tuple[int, int], ...] = ()  # seed-indexed spawn variation


@dataclass
class TaskSpec:
    task_id: str
    description: str
    config: WorldConfig
    map_size: tuple[int, int]
    placements: list[tuple[int, tuple[int, int]]]
    agents: list[TaskAgent]
    subject_mode: str
    goal: object
    tick_budget: int
    episodes: int
    seeds: list[int]
    backend_configs: dict[str, dict] = field(default_factory=dict)

    def subject(self) -> TaskAgent:
        return next(a for a in self.agents if a.role == SUBJECT)

    def validate(self) -> None:
        subjects = [a for a in self.agents if a.role == SUBJECT]
        if len(subjects) != 1:
            raise ConfigError(f"task needs exactly one subject agent, found {len(subjects)}")
        if self.tick_budget < 1:
            raise ConfigError("tick_budget must be positive")
        if self.episodes < 1:
            raise ConfigError("episodes must be positive")
        if len(self.seeds) != self.episodes:
            raise ConfigError(
                f"{self.episodes} episodes need {self.episodes} seeds, got {len(self.seeds)}"
            )
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("episode seeds must be distinct")
        if self.subject_mode not in (PARTICIPANT, MAYOR_MODE):
            raise ConfigError(f"subject_mode must be participant or mayor, not {self.subject_mode!r}")


def _load_doc(value, config_dir: Path | None, what: str) -> list:
    """A world section entry is either an inline array or a file path."""
    if isinstance(value, list):
        return value
    if isinstance(value, str):
        path = Path(value)
        if config_dir is not None and not path.is_absolute():
            path = config_dir / path
        if not path.exists():
            raise ConfigError(f"{what} document not found: {path}")
        return json.loads(path.read_text())
    raise ConfigError(f"{what} must be a path or an inline array")


def task_from_json(doc: dict, config_dir: str | Path | None = None) -> TaskSpec:
    config_dir = Path(config_dir) if config_dir else None
    try:
        world_raw = doc["world"]
        config = parse_world_config(
            _load_doc(world_raw["equipment"], config_dir, "equipment"),
            _load_doc(world_raw["economy"], config_dir, "economy"),
            _load_doc(world_raw["buildings"], config_dir, "buildings"),
        )
        map_raw = world_raw["map"]
        placements = [
            (p["building_id"], tuple(p["origin"])) for p in map_raw.get("placements", [])
        ]
        agents = []
        for raw in doc["agents"]:
            role = raw.get("role", BASELINE).lower()
            if role not in (SUBJECT, BASELINE):
                raise ConfigError(f"agent role must be subject or baseline, not {role!r}")
            agents.append(
                TaskAgent(
                    profile=AgentProfile.from_json(raw),
                    spawn=tuple(raw.get("spawn", [0, 0])),
                    role=role,
                    spawn_pool=tuple(tuple(s) for s in raw.get("spawn_pool", [])),
                )
            )
        episodes = doc.get("episodes", 1)
        seeds = list(doc.get("seeds", range(1, episodes + 1)))
        task = TaskSpec(
            task_id=doc["task_id"],
            description=doc.get("description", ""),
            config=config,
            map_size=(map_raw["width"], map_raw["height"]),
            placements=placements,
            agents=agents,
            subject_mode=doc.get("subject_mode", PARTICIPANT).lower(),
            goal=predicate_from_json(doc["goal"]),
            tick_budget=doc["tick_budget"],
            episodes=episodes,
            seeds=seeds,
            backend_configs=doc.get("backends", {}),
        )
    except KeyError as exc:
        raise ConfigError(f"task file is missing field {exc}") from exc
    task.validate()
    return task


def load_task(path: str | Path, config_dir: str | Path | None = None) -> TaskSpec:
    path = Path(path)
    return task_from_json(json.loads(path.read_text()), config_dir or path.parent)


def backend_from_config(raw: dict):
    kind = raw.get("type")
    if kind == "scripted":
        return ScriptedBackend(
            rules=[(r["pattern"], r["response"]) for r in raw.get("rules", [])],
            default_response=raw.get("default_response", ""),
        )
    if kind == "remote":
        return RemoteBackend(
            endpoint=raw["endpoint"],
            model=raw["model"],
            token_env=raw.get("token_env"),
            timeout=raw.get("timeout", 30.0),
            retries=raw.get("retries", 2),
        )
    raise ConfigError(f"unknown backend type {raw.get('type')!r}")


def build_registry(task: TaskSpec, extra_configs: dict | None = None) -> BackendRegistry:
    registry = BackendRegistry()
    merged = dict(task.backend_configs)
    merged.update(extra_configs or {})
    for backend_id, raw in merged.items():
        registry.register(backend_id, backend_from_config(raw))
    return registry


# --- episode execution -------------------------------------------------------------------


@dataclass
class EpisodeResult:
    task_id: str
    seed: int
    passed: bool
    ticks_used: int
    backend_calls: int
    log_path: str | None = None

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "seed": self.seed,
            "passed": self.passed,
            "ticks_used": self.ticks_used,
            "backend_calls": self.backend_calls,
            "log": self.log_path,
        }


@dataclass
class PassRateReport:
    task_id: str
    episodes: list[EpisodeResult]
    passes: int
    pass_rate: float
    backend_calls_total: int

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "pass_rate": self.pass_rate,
            "passes": self.passes,
            "episode_count": len(self.episodes),
            "episodes": [e.to_json() for e in self.episodes],
            "backend_calls_total": self.backend_calls_total,
        }


class MayorDriver:
    """Feeds the subject backend's chat decisions into the command queue
    when the subject plays the town mayor instead of a resident.

    Influence flows through conversation only: the driver may say something
    to one agent per tick, or hold its tongue.
    """

    def __init__(self, profile: AgentProfile, objective: str):
        self.profile = profile
        self.objective = objective

    def decide(self, state, runtime) -> None:
        view = engine.build_view(state, state.tick)
        recent = "\n".join(
            f"- [{e.kind}] {json.dumps(e.payload, separators=(',', ':'))}"
            for e in state.events[-5:]
        ) or "(none)"
        prompt = (
            f"You are the mayor of this town: {self.profile.summary()}\n"
            f"Your objective: {self.objective}\n"
            f"{view.observation()}\n"
            f"Recent events:\n{recent}\n"
            "You may speak to one resident this tick.\n"
            "Reply with one line: 'ACTION: say <agent name> <text>' or 'ACTION: idle'."
        )
        caller = runtime.caller_for(self.profile.backend_id, state.tick, engine.MAYOR)
        try:
            response = caller.ask(prompt, tag="mayor")
        except BackendError:
            return
        for line in response.splitlines():
            m = _ACTION_RE.match(line)
            if not m:
                continue
            body = m.group(1).strip()
            if body.lower().startswith("say "):
                peer_id, text = view.match_agent_prefix(body[4:].strip())
                if peer_id is not None and text:
                    engine.queue_command(
                        state,
                        "mayor_say",
                        {"target_agent": peer_id, "text": text},
                    )
            return


def build_episode_state(task: TaskSpec, seed: int, runtime: engine.Runtime) -> engine.SimState:
    """World up, buildings placed, agents spawned — all as tick-0 events."""
    width, height = task.map_size
    state = engine.new_sim_state(task.config, build_world_map(task.config, width, height, []), seed)
    for building_id, origin in task.placements:
        engine.apply_place_building(state, building_id, origin, tick=0)
    for task_agent in task.agents:
        if task.subject_mode == MAYOR_MODE and task_agent.role == SUBJECT:
            continue  # the subject governs, it does not walk the streets
        profile = AgentProfile.from_json(task_agent.profile.to_json())  # fresh copy per episode
        spawn = task_agent.spawn
        if task_agent.spawn_pool:
            # seeded draw: spawn variation is a pure function of the episode seed
            spawn = task_agent.spawn_pool[state.rng_next() % len(task_agent.spawn_pool)]
        engine.spawn_agent(state, runtime, profile, spawn, tick=0)
    return state


def run_episode(
    task: TaskSpec,
    seed: int,
    registry: BackendRegistry,
    *,
    embedder=None,
    support_backend_id: str | None = None,
    log_path: str | Path | None = None,
) -> EpisodeResult:
    runtime = engine.default_runtime(
        backends=registry,
        embedder=embedder,
        support_backend_id=support_backend_id,
    )
    state = build_episode_state(task, seed, runtime)
    driver = None
    if task.subject_mode == MAYOR_MODE:
        driver = MayorDriver(task.subject().profile, task.description or task.subject().profile.goal)

    def goal_holds(st) -> bool:
        return evaluate_predicate(task.goal, st, st.events)

    if driver is None:
        engine.run(state, task.tick_budget, runtime, stop_predicate=goal_holds)
    else:
        for _ in range(task.tick_budget):
            if goal_holds(state):
                break
            driver.decide(state, runtime)
            engine.tick(state, runtime)
            if goal_holds(state):
                break

    passed = goal_holds(state)
    state.emit(
        engine.EventKind.EPISODE_END,
        engine.SYSTEM,
        {"task_id": task.task_id, "seed": seed, "passed": passed, "ticks_used": state.tick},
    )
    saved = None
    if log_path is not None:
        log_path = Path(log_path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        log_path.write_text(engine.events_to_jsonl(state.events))
        saved = str(log_path)
    return EpisodeResult(
        task_id=task.task_id,
        seed=seed,
        passed=passed,
        ticks_used=state.tick,
        backend_calls=len(runtime.call_log),
        log_path=saved,
    )


def run_task(
    task: TaskSpec,
    registry: BackendRegistry,
    *,
    embedder=None,
    support_backend_id: str | None = None,
    parallel: int = 1,
    logs_dir: str | Path | None = None,
) -> PassRateReport:
    """All episodes, aggregated in seed order regardless of execution order."""
    task.validate()

    def one(seed: int) -> EpisodeResult:
        log_path = None
        if logs_dir is not None:
            log_path = Path(logs_dir) / f"{task.task_id}_seed{seed}.events.jsonl"
        return run_episode(
            task,
            seed,
            registry,
            embedder=embedder,
            support_backend_id=support_backend_id,
            log_path=log_path,
        )

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(one, task.seeds))
    else:
        results = [one(seed) for seed in task.seeds]
    passes = sum(1 for r in results if r.passed)
    return PassRateReport(
        task_id=task.task_id,
        episodes=results,
        passes=passes,
        pass_rate=passes / len(results),
        backend_calls_total=sum(r.backend_calls for r in results),
    )
