"""Shared fixture town: a store with a counter, a kitchen with two stoves,
and scripted agents that walk the golden path (buy a chicken, work a
shift, greet each other). Everything here is deterministic by design so
tests can compare whole event logs byte for byte.
"""

from __future__ import annotations

import json

from townsim import engine
from townsim.agents import AgentProfile
from townsim.backends import BackendRegistry, ScriptedBackend
from townsim.world import build_world_map, parse_world_config

STORE_AT = (2, 2)
KITCHEN_AT = (6, 5)
MAP_W, MAP_H = 12, 8

COUNTER_ID = 1
RULE_STOVE_ID = 2
MODEL_STOVE_ID = 3
STORE_BUILDING = 1
KITCHEN_BUILDING = 2


def world_documents(salary: int = 15) -> tuple[list, list, list]:
    equipment = [
        {
            "id": COUNTER_ID,
            "type": "counter",
            "description": "This is the counter of a grocery store where goods are sold and staff work shifts.",
            "function": {
                "mode": "rules",
                "rules": [
                    {"pattern": "buy chicken", "outcome": "You bought a fresh chicken.", "success": True},
                    {"pattern": "work", "outcome": "You finished a shift of work at the counter.", "success": True},
                ],
                "fallback": {"outcome": "Nothing happens.", "success": False},
            },
        },
        {
            "id": RULE_STOVE_ID,
            "type": "stove",
            "description": "This is a kitchen stove for heating pots and pans.",
            "function": {
                "mode": "rules",
                "rules": [
                    {"pattern": "boil water", "outcome": "You boiled a pot of water.", "success": True},
                ],
                "fallback": {"outcome": "Meaningless operation", "success": False},
            },
        },
        {
            "id": MODEL_STOVE_ID,
            "type": "stove",
            "description": "This is a kitchen stove for heating pots and pans.",
            "function": {"mode": "model"},
        },
    ]
    economy = [
        {"id": COUNTER_ID, "menu": {"chicken": 20}, "salary": salary},
    ]
    buildings = [
        {
            "assets": "store_v1.2_0719",
            "id": STORE_BUILDING,
            "price": 2000,
            "type": "store",
            "blocks": [[1, 1], [1, 1]],
            "equipment": [COUNTER_ID, 0, 0, 0],
        },
        {
            "assets": "kitchen_v1.0",
            "id": KITCHEN_BUILDING,
            "price": 1500,
            "type": "kitchen",
            "blocks": [[1, 1]],
            "equipment": [RULE_STOVE_ID, MODEL_STOVE_ID],
        },
    ]
    return equipment, economy, buildings


def make_config(salary: int = 15):
    return parse_world_config(*world_documents(salary=salary))


def make_map(config, with_kitchen: bool = True):
    placements = [(STORE_BUILDING, STORE_AT)]
    if with_kitchen:
        placements.append((KITCHEN_BUILDING, KITCHEN_AT))
    return build_world_map(config, MAP_W, MAP_H, placements)


SCRIPT_RULES = [
    ("is the goal achieved", "VERDICT: continue"),
    (
        "your goal: buy a chicken then work a shift",
        "SUBTASK: go to the store counter\nSUBTASK: buy chicken\nSUBTASK: work a shift",
    ),
    ("your goal: greet ada", "SUBTASK: say hello to Ada"),
    ("current subtask: go to the store counter", "ACTION: move equip 1"),
    ("current subtask: buy chicken", "ACTION: use 1 buy chicken"),
    ("current subtask: work a shift", "ACTION: use 1 work"),
    ("current subtask: say hello to ada", "ACTION: say Ada hello, how is the store?"),
    ("your purpose: buy chicken", "OPERATION: buy chicken"),
    ("your purpose: work", "OPERATION: work"),
    ("you are talking with bob", "Hi Bob, I am off to buy a chicken."),
    ("you are talking with ada", "END"),
    ("you are talking with the mayor", "Thank you for checking in, mayor!"),
    # support-model stove, used by the model-backed interaction tests
    ("an agent performs this operation on it: get a cup of tea", "You can not get tea from a stove"),
]


def make_backend() -> ScriptedBackend:
    return ScriptedBackend(rules=SCRIPT_RULES, default_response="")


def make_registry() -> BackendRegistry:
    registry = BackendRegistry()
    registry.register("scripted-v1", make_backend())
    return registry


def make_runtime() -> engine.Runtime:
    return engine.default_runtime(backends=make_registry())


def ada_profile(goal: str = "buy a chicken then work a shift") -> AgentProfile:
    return AgentProfile(
        agent_id=0, name="Ada", bio="A pragmatic shopper.", goal=goal,
        backend_id="scripted-v1", starting_cash=100,
    )


def bob_profile() -> AgentProfile:
    return AgentProfile(
        agent_id=0, name="Bob", bio="A friendly neighbour.", goal="greet Ada",
        backend_id="scripted-v1", starting_cash=50,
    )


def carol_profile() -> AgentProfile:
    return AgentProfile(
        agent_id=0, name="Carol", bio="Just watching.", goal="",
        backend_id="scripted-v1", starting_cash=10,
    )


def build_town_state(runtime, seed: int = 7, salary: int = 15) -> engine.SimState:
    """Three agents in the fixture town; all setup logged as tick-0 events."""
    config = make_config(salary=salary)
    state = engine.new_sim_state(config, build_world_map(config, MAP_W, MAP_H, []), seed=seed)
    engine.apply_place_building(state, STORE_BUILDING, STORE_AT, tick=0)
    engine.spawn_agent(state, runtime, ada_profile(), (0, 0), tick=0)
    engine.spawn_agent(state, runtime, bob_profile(), (1, 0), tick=0)
    engine.spawn_agent(state, runtime, carol_profile(), (9, 6), tick=0)
    return state


def queue_fixture_commands(state: engine.SimState) -> None:
    """The five timed commands of the determinism fixture. Two of them are
    deliberately invalid and must produce error events, deterministically."""
    engine.queue_command(
        state,
        "create_agent",
        {
            "profile": {"name": "Dana", "bio": "", "goal": "", "backend": "scripted-v1", "cash": 5},
            "spawn": [8, 1],
        },
        applies_at=10,
    )
    engine.queue_command(
        state, "create_building", {"building_id": KITCHEN_BUILDING, "origin": list(KITCHEN_AT)},
        applies_at=20,
    )
    engine.queue_command(
        state, "mayor_say", {"target_agent": "Ada", "text": "How is the town treating you?"},
        applies_at=30,
    )
    engine.queue_command(
        state,
        "create_agent",
        {
            "profile": {"name": "Ada", "bio": "", "goal": "", "backend": "scripted-v1", "cash": 0},
            "spawn": [8, 2],
        },
        applies_at=40,
    )
    engine.queue_command(
        state, "create_building", {"building_id": STORE_BUILDING, "origin": [2, 2]},
        applies_at=50,
    )


def task_document(
    goal=None,
    spawn_pool=None,
    tick_budget: int = 20,
    seeds=None,
    salary: int = 15,
) -> dict:
    """An inline task document on the fixture world with scripted backends."""
    equipment, economy, buildings = world_documents(salary=salary)
    ada = {
        "name": "Ada",
        "bio": "A pragmatic shopper.",
        "goal": "buy a chicken then work a shift",
        "backend": "scripted-v1",
        "cash": 100,
        "role": "subject",
        "spawn": [0, 0],
    }
    if spawn_pool is not None:
        ada["spawn_pool"] = [list(s) for s in spawn_pool]
    seeds = list(seeds) if seeds is not None else [1]
    return {
        "task_id": "buy-chicken",
        "description": "Buy a chicken at the store counter, then work a shift.",
        "world": {
            "equipment": equipment,
            "economy": economy,
            "buildings": buildings,
            "map": {
                "width": MAP_W,
                "height": MAP_H,
                "placements": [{"building_id": STORE_BUILDING, "origin": list(STORE_AT)}],
            },
        },
        "agents": [ada],
        "subject_mode": "participant",
        "goal": goal
        or {"kind": "event_occurred", "event_kind": "purchase", "payload_match": {"item": "chicken"}},
        "tick_budget": tick_budget,
        "episodes": len(seeds),
        "seeds": seeds,
        "backends": {
            "scripted-v1": {
                "type": "scripted",
                "rules": [{"pattern": p, "response": r} for p, r in SCRIPT_RULES],
                "default_response": "",
            }
        },
    }


NEAR_SPAWNS = [[0, 0], [0, 1], [1, 0]]
FAR_SPAWN = [11, 7]  # 14 greedy steps from the counter approach cell


def find_mixed_seeds(pool_size: int = 4, near: int = 3, far: int = 1) -> list[int]:
    """Deterministically search out seeds whose first rng draw lands on a
    near spawn (pass) or the far spawn (fail), 3-vs-1."""
    config = make_config()
    world = make_map(config, with_kitchen=False)
    near_seeds, far_seeds = [], []
    seed = 1
    while len(near_seeds) < near or len(far_seeds) < far:
        probe = engine.SimState(config=config, world_map=world, seed=seed)
        idx = probe.rng_next() % pool_size
        if idx == pool_size - 1:
            if len(far_seeds) < far:
                far_seeds.append(seed)
        elif len(near_seeds) < near:
            near_seeds.append(seed)
        seed += 1
    return sorted(near_seeds + far_seeds)


def mixed_task_document() -> dict:
    """Four episodes: three spawns can buy the chicken inside the budget,
    one spawns too far away. Pass/fail is a pure function of the seed."""
    return task_document(
        spawn_pool=NEAR_SPAWNS + [FAR_SPAWN],
        tick_budget=8,
        seeds=find_mixed_seeds(),
    )


def paper_world_documents() -> tuple[list, list, list]:
    """The configuration trio with the exact shapes of the published
    listings: counter equipment, a chicken on the menu at 20 with salary 0,
    and the store_v1.2_0719 building."""
    equipment = [
        {
            "id": 1,
            "type": "counter",
            "function": {
                "mode": "rules",
                "rules": [
                    {"pattern": "buy chicken", "outcome": "You bought a chicken.", "success": True}
                ],
                "fallback": {"outcome": "Nothing happens.", "success": False},
            },
            "description": "This is the counter of a grocery store.",
        }
    ]
    economy = [{"id": 1, "menu": {"chicken": 20}, "salary": 0}]
    buildings = [
        {
            "assets": "store_v1.2_0719",
            "id": 1,
            "price": 2000,
            "type": "store",
            "blocks": [[1, 0, 0, 1, 1]],
            "equipment": [1, 0, 0, 0, 0],
        }
    ]
    return equipment, economy, buildings


def paper_world_texts() -> tuple[str, str, str]:
    eq, ec, bd = paper_world_documents()
    return json.dumps(eq), json.dumps(ec), json.dumps(bd)
