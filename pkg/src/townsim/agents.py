"""Agent profiles, mutable state, and the perceive -> plan -> act step.

Each tick an agent takes exactly one action. A walk in progress continues
without consulting the planner; otherwise the planner chain runs: a missing
plan is decomposed from the goal, the plan is assessed (achieved /
continue / replan), and the decision module picks the action that realizes
the current subtask. Equipment actions carry an operation text proposed by
the tool-use system.

Movement is one cell per tick, 4-directional, stepping greedily toward the
target with the x axis preferred on diagonal pulls; solid building cells
block. "Adjacent" everywhere means Chebyshev distance <= 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .actions import AgentAction
from .errors import (
    DuplicateNameError,
    InsufficientCashError,
    OutOfBoundsError,
    OverlapError,
    UnknownBackendError,
    UnknownItemError,
    UnknownSystemError,
)
from .planning import ACHIEVED, ACTIVE, PlanContext, REPLAN, STUCK
from .tooluse import propose_operation
from .world import Cell, EconomyDef, WorldConfig, WorldMap

if TYPE_CHECKING:
    from .planning import Plan

IDLE = "idle"
MOVING = "moving"
CONVERSING = "conversing"
USING = "using"

MEMORY_K = 5  # memories retrieved into prompt context


@dataclass
class AgentProfile:
    agent_id: int
    name: str
    bio: str
    goal: str
    backend_id: str
    memory_system_id: str = "vector-v1"
    plan_system_id: str = "chain-v1"
    owned_buildings: tuple[int, ...] = ()
    starting_cash: int = 0

    def summary(self) -> str:
        return f"{self.name}. {self.bio}" if self.bio else self.name

    def to_json(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "name": self.name,
            "bio": self.bio,
            "goal": self.goal,
            "backend": self.backend_id,
            "memory_system": self.memory_system_id,
            "plan_system": self.plan_system_id,
            "buildings": list(self.owned_buildings),
            "cash": self.starting_cash,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "AgentProfile":
        return cls(
            agent_id=raw.get("agent_id", 0),
            name=raw["name"],
            bio=raw.get("bio", ""),
            goal=raw.get("goal", ""),
            backend_id=raw["backend"],
            memory_system_id=raw.get("memory_system", "vector-v1"),
            plan_system_id=raw.get("plan_system", "chain-v1"),
            owned_buildings=tuple(raw.get("buildings", [])),
            starting_cash=raw.get("cash", 0),
        )


@dataclass
class AgentState:
    profile: AgentProfile
    location: Cell
    cash: int
    plan: "Plan | None" = None
    status: str = IDLE
    move_target: Cell | None = None

    def to_json(self) -> dict:
        return {
            "profile": self.profile.to_json(),
            "location": list(self.location),
            "cash": self.cash,
            "plan": self.plan.to_json() if self.plan else None,
            "status": self.status,
            "move_target": list(self.move_target) if self.move_target else None,
        }


@dataclass
class WorldView:
    """What an agent (or the UI) can see of the world this tick."""

    tick: int
    world_map: WorldMap
    config: WorldConfig
    roster: list[tuple[int, str, Cell, str]]  # (id, name, location, status)
    self_id: int | None = None
    _observation: str | None = field(default=None, repr=False)

    def in_bounds(self, cell: Cell) -> bool:
        return self.world_map.in_bounds(cell)

    def resolve_agent_id(self, name: str) -> int | None:
        lowered = name.lower()
        for agent_id, agent_name, _loc, _st in self.roster:
            if agent_name.lower() == lowered:
                return agent_id
        return None

    def match_agent_prefix(self, text: str) -> tuple[int | None, str]:
        """Split '<agent name> <utterance>'; longest known name wins."""
        lowered = text.lower()
        best: tuple[int, str] | None = None
        for agent_id, agent_name, _loc, _st in self.roster:
            prefix = agent_name.lower() + " "
            if lowered.startswith(prefix):
                if best is None or len(agent_name) > len(best[1]):
                    best = (agent_id, agent_name)
        if best is None:
            return None, ""
        return best[0], text[len(best[1]) :].strip()

    def approach_target(self, equipment_id: int, from_cell: Cell | None = None) -> Cell | None:
        """A free cell adjacent to the equipment, deterministically chosen
        (closest to from_cell, then lowest y, then lowest x). Returns
        from_cell itself when already adjacent; None when unreachable."""
        cells = self.world_map.equipment_cells(equipment_id)
        if not cells:
            return None
        if from_cell is None and self.self_id is not None:
            for agent_id, _n, loc, _s in self.roster:
                if agent_id == self.self_id:
                    from_cell = loc
                    break
        if from_cell is not None and any(
            max(abs(cx - from_cell[0]), abs(cy - from_cell[1])) <= 1 for cx, cy in cells
        ):
            return from_cell
        candidates = []
        for cx, cy in cells:
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    cell = (cx + dx, cy + dy)
                    if not self.world_map.in_bounds(cell) or self.world_map.is_blocked(cell):
                        continue
                    dist = (
                        abs(cell[0] - from_cell[0]) + abs(cell[1] - from_cell[1])
                        if from_cell
                        else 0
                    )
                    candidates.append((dist, cell[1], cell[0], cell))
        if not candidates:
            return None
        candidates.sort()
        return candidates[0][3]

    def observation(self) -> str:
        if self._observation is not None:
            return self._observation
        wm = self.world_map
        lines = [f"Town {wm.width}x{wm.height}, tick {self.tick}."]
        if wm.placements:
            parts = []
            for placement in wm.placements:
                building = self.config.buildings[placement.building_id]
                slots = ", ".join(
                    f"{self.config.equipment[eq_id].kind}#{eq_id} at "
                    f"({placement.origin[0] + dx},{placement.origin[1] + dy})"
                    for (dx, dy), eq_id in building.equipment_slots
                )
                desc = f"{building.kind}#{building.id} at {placement.origin}"
                if slots:
                    desc += f" [{slots}]"
                parts.append(desc)
            lines.append("Buildings: " + "; ".join(parts) + ".")
        else:
            lines.append("Buildings: none.")
        if self.roster:
            people = "; ".join(
                f"{name}@({loc[0]},{loc[1]}) [{status}]"
                for _id, name, loc, status in self.roster
            )
            lines.append("People: " + people + ".")
        self._observation = "\n".join(lines)
        return self._observation


@dataclass
class AgentSystems:
    """The support systems wired to one agent for one step."""

    memory: object  # MemoryStore-compatible
    planner: object  # ChainPlanner-compatible
    skills: object  # SkillStore
    support_caller: object | None = None


# --- lifecycle ----------------------------------------------------------------------


def validate_new_agent(state, runtime, profile: AgentProfile, spawn: Cell) -> None:
    """All create_agent preconditions, with no mutation: the gateway runs
    this to reject bad commands before they are queued."""
    spawn = tuple(spawn)
    for live in state.agents.values():
        if live.profile.name == profile.name:
            raise DuplicateNameError(f"agent name {profile.name!r} already live")
    if profile.backend_id not in runtime.backends:
        raise UnknownBackendError(f"no backend registered as {profile.backend_id!r}")
    if profile.memory_system_id not in runtime.memory_systems:
        raise UnknownSystemError(f"no memory system registered as {profile.memory_system_id!r}")
    if profile.plan_system_id not in runtime.plan_systems:
        raise UnknownSystemError(f"no plan system registered as {profile.plan_system_id!r}")
    if profile.starting_cash < 0:
        raise ValueError("starting_cash must be >= 0")
    if not state.world_map.in_bounds(spawn):
        raise OutOfBoundsError(f"spawn {spawn} outside the map")
    if state.world_map.is_blocked(spawn):
        raise OverlapError(f"spawn {spawn} is inside a building wall")


def create_agent(state, runtime, profile: AgentProfile, spawn: Cell) -> AgentState:
    """Validate the profile against the live world and bring the agent up.

    Ids are handed out in creation order and never reused.
    """
    spawn = tuple(spawn)
    validate_new_agent(state, runtime, profile, spawn)
    profile.agent_id = state.next_agent_id
    state.next_agent_id += 1
    agent = AgentState(profile=profile, location=spawn, cash=profile.starting_cash)
    state.agents[profile.agent_id] = agent
    state.memories[profile.agent_id] = runtime.memory_systems[profile.memory_system_id](
        runtime.embedder
    )
    return agent


# --- economy -------------------------------------------------------------------------


def purchase(agent: AgentState, equipment_id: int, item: str, economy: EconomyDef) -> AgentState:
    """All-or-nothing: on any error the agent's cash is untouched."""
    price = economy.price_of(item)
    if price is None:
        raise UnknownItemError(f"{item!r} is not on the menu of equipment {equipment_id}")
    if agent.cash < price:
        raise InsufficientCashError(
            f"{agent.profile.name} has {agent.cash}, {item!r} costs {price}"
        )
    agent.cash -= price
    return agent


def earn_salary(agent: AgentState, economy: EconomyDef) -> AgentState:
    agent.cash += economy.salary
    return agent


# --- movement -------------------------------------------------------------------------


def _sign(v: int) -> int:
    return (v > 0) - (v < 0)


def next_step(world_map: WorldMap, loc: Cell, target: Cell) -> Cell | None:
    """One greedy 4-directional step toward target, or None when every
    distance-reducing step is blocked (or already there). The x axis is
    preferred when both axes could shrink."""
    dx = target[0] - loc[0]
    dy = target[1] - loc[1]
    candidates = []
    if dx:
        candidates.append((loc[0] + _sign(dx), loc[1]))
    if dy:
        candidates.append((loc[0], loc[1] + _sign(dy)))
    for cell in candidates:
        if world_map.in_bounds(cell) and not world_map.is_blocked(cell):
            return cell
    return None


# --- the per-tick step -----------------------------------------------------------------


def _build_context(agent: AgentState, view: WorldView, systems: AgentSystems) -> PlanContext:
    plan = agent.plan
    query = (plan.current_subtask if plan and plan.current_subtask else None) or (
        agent.profile.goal or agent.profile.name
    )
    memories = systems.memory.retrieve(agent.profile.agent_id, query, k=MEMORY_K)
    return PlanContext(
        profile_summary=agent.profile.summary(),
        goal=agent.profile.goal,
        plan=plan,
        memories=memories,
        observation=view.observation(),
        tick=view.tick,
        view=view,
    )


def step_agent(agent: AgentState, view: WorldView, systems: AgentSystems, caller) -> AgentAction:
    """Choose exactly one action for this tick.

    Backend failures propagate to the engine, which logs them and idles
    the agent; with a scripted backend this function is a pure function of
    (agent state, world view, rules).
    """
    tick = view.tick
    planner = systems.planner

    # a walk in progress continues without a planner consult
    if agent.status == MOVING and agent.move_target is not None:
        return AgentAction.move(agent.move_target, tick)

    if agent.plan is not None and agent.plan.status == STUCK:
        agent.plan = None  # replan after a stuck tick

    if agent.plan is None:
        if not agent.profile.goal:
            return AgentAction.idle(tick)
        ctx = _build_context(agent, view, systems)
        agent.plan = planner.make_plan(agent.profile.goal, ctx, caller)
    elif agent.plan.status != ACTIVE:
        return AgentAction.idle(tick)  # achieved: nothing left to do

    ctx = _build_context(agent, view, systems)
    verdict = planner.assess(agent.plan, ctx, caller)
    if verdict == ACHIEVED:
        return AgentAction.idle(tick)
    if verdict == REPLAN:
        agent.plan = None
        return AgentAction.idle(tick)

    action = planner.next_action(agent.plan, ctx, caller)
    if action.kind == "use" and action.operation is None:
        equipment = view.config.equipment.get(action.equipment_id)
        if equipment is None or not action.purpose:
            return AgentAction.idle(tick)
        operation = propose_operation(
            agent.profile.agent_id, equipment, action.purpose, systems.skills, caller
        )
        action = AgentAction.use(action.equipment_id, action.purpose, operation, tick)
    return action
