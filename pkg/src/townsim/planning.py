"""Goal decomposition and per-tick decision making.

A planner is an ordered chain of pluggable prompt modules. The default
chain runs decompose -> assess -> decide: decompose turns the agent's goal
into subtasks once, assess judges each tick whether the goal is achieved /
the plan continues / a replan is due, and decide picks the one action that
realizes the current subtask.

Backends answer in a line-oriented convention the modules parse:

    SUBTASK: <step>                      (one line per subtask)
    VERDICT: achieved|continue|replan
    ACTION: move <x> <y>
    ACTION: move equip <equipment id>
    ACTION: use <equipment id> <purpose>
    ACTION: say <agent name> <utterance>
    ACTION: idle

A response that does not parse earns exactly one re-ask (same prompt plus
a format reminder); a second failure is a typed error, except in decide
where the fallback is an idle action and a stuck counter — three strikes
mark the plan Stuck.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from .actions import AgentAction
from .errors import EmptyGoalError, PlanParseError, PromptParseError
from .memory import MemoryRecord

ACTIVE = "active"
ACHIEVED = "achieved"
STUCK = "stuck"

CONTINUE = "continue"
REPLAN = "replan"

STUCK_THRESHOLD = 3
RETRY_SUFFIX = "\nReply strictly in the required format."

_SUBTASK_RE = re.compile(r"^\s*subtask:\s*(.+?)\s*$", re.IGNORECASE)
_VERDICT_RE = re.compile(r"^\s*verdict:\s*(achieved|continue|replan)\s*$", re.IGNORECASE)
_ACTION_RE = re.compile(r"^\s*action:\s*(.+?)\s*$", re.IGNORECASE)


@dataclass
class Plan:
    goal: str
    subtasks: list[str]
    cursor: int = 0
    status: str = ACTIVE
    stuck_count: int = 0

    @property
    def current_subtask(self) -> str | None:
        if 0 <= self.cursor < len(self.subtasks):
            return self.subtasks[self.cursor]
        return None

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.subtasks)

    def to_json(self) -> dict:
        return {
            "goal": self.goal,
            "subtasks": list(self.subtasks),
            "cursor": self.cursor,
            "status": self.status,
            "stuck_count": self.stuck_count,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "Plan":
        return cls(
            goal=raw["goal"],
            subtasks=list(raw["subtasks"]),
            cursor=raw["cursor"],
            status=raw["status"],
            stuck_count=raw.get("stuck_count", 0),
        )


@dataclass
class PlanContext:
    """Everything a prompt module may render: who the agent is, the live
    plan, retrieved memories, and what the world looks like right now."""

    profile_summary: str
    goal: str
    plan: Plan | None
    memories: list[MemoryRecord]
    observation: str
    tick: int
    view: object | None = None  # WorldView; duck-typed to keep this module leaf-ish


@dataclass(frozen=True)
class PromptModule:
    """A named (render, parse) pair. render must be deterministic for a
    given context; parse either returns a value or raises PromptParseError."""

    name: str
    render: Callable[[PlanContext], str]
    parse: Callable[[str], object]


def _render_memories(memories: list[MemoryRecord]) -> str:
    if not memories:
        return "(none)"
    return "\n".join(f"- [tick {m.tick}] {m.text}" for m in memories)


# --- default module implementations ------------------------------------------------


def _decompose_render(ctx: PlanContext) -> str:
    return (
        f"You are {ctx.profile_summary}\n"
        f"Your goal: {ctx.goal}\n"
        f"{ctx.observation}\n"
        f"Relevant memories:\n{_render_memories(ctx.memories)}\n"
        "Decompose the goal into short, concrete subtasks in order.\n"
        "Reply with one line per subtask, each formatted as 'SUBTASK: <step>'."
    )


def _decompose_parse(text: str) -> list[str]:
    subtasks = []
    for line in text.splitlines():
        m = _SUBTASK_RE.match(line)
        if m:
            subtasks.append(m.group(1))
    if not subtasks:
        raise PromptParseError(f"no SUBTASK lines in response: {text[:80]!r}")
    return subtasks


def _assess_render(ctx: PlanContext) -> str:
    plan = ctx.plan
    assert plan is not None
    progress = f"{plan.cursor}/{len(plan.subtasks)} subtasks done"
    current = plan.current_subtask or "(none)"
    return (
        f"You are {ctx.profile_summary}\n"
        f"Your goal: {ctx.goal}\n"
        f"Assess the plan: {progress}; current subtask: {current}\n"
        f"{ctx.observation}\n"
        f"Relevant memories:\n{_render_memories(ctx.memories)}\n"
        "Is the goal achieved, should the plan continue, or is a replan needed?\n"
        "Reply with exactly one line: 'VERDICT: achieved', 'VERDICT: continue' or 'VERDICT: replan'."
    )


def _assess_parse(text: str) -> str:
    for line in text.splitlines():
        m = _VERDICT_RE.match(line)
        if m:
            return m.group(1).lower()
    raise PromptParseError(f"no VERDICT line in response: {text[:80]!r}")


def _decide_render(ctx: PlanContext) -> str:
    plan = ctx.plan
    assert plan is not None
    return (
        f"You are {ctx.profile_summary}\n"
        f"Current subtask: {plan.current_subtask}\n"
        f"{ctx.observation}\n"
        f"Relevant memories:\n{_render_memories(ctx.memories)}\n"
        "Choose exactly one action for this turn. Reply with a single line:\n"
        "'ACTION: move <x> <y>' to walk toward a cell,\n"
        "'ACTION: move equip <equipment id>' to walk next to an equipment,\n"
        "'ACTION: use <equipment id> <purpose>' to operate adjacent equipment,\n"
        "'ACTION: say <agent name> <utterance>' to talk to someone next to you,\n"
        "'ACTION: idle' to wait."
    )


@dataclass(frozen=True)
class ActionDirective:
    """The decision module's parsed output, before world resolution."""

    verb: str  # move | move_equip | use | say | idle
    x: int | None = None
    y: int | None = None
    equipment_id: int | None = None
    text: str = ""


def _decide_parse(text: str) -> ActionDirective:
    for line in text.splitlines():
        m = _ACTION_RE.match(line)
        if not m:
            continue
        body = m.group(1).strip()
        parts = body.split()
        verb = parts[0].lower() if parts else ""
        if verb == "idle":
            return ActionDirective(verb="idle")
        if verb == "move" and len(parts) >= 3 and parts[1].lower() == "equip":
            try:
                return ActionDirective(verb="move_equip", equipment_id=int(parts[2]))
            except ValueError:
                break
        if verb == "move" and len(parts) == 3:
            try:
                return ActionDirective(verb="move", x=int(parts[1]), y=int(parts[2]))
            except ValueError:
                break
        if verb == "use" and len(parts) >= 3:
            try:
                eq_id = int(parts[1])
            except ValueError:
                break
            return ActionDirective(verb="use", equipment_id=eq_id, text=" ".join(parts[2:]))
        if verb == "say" and len(parts) >= 3:
            return ActionDirective(verb="say", text=body[len(parts[0]) :].strip())
        break
    raise PromptParseError(f"no parseable ACTION line in response: {text[:80]!r}")


def default_decompose_module() -> PromptModule:
    return PromptModule(name="decompose", render=_decompose_render, parse=_decompose_parse)


def default_assess_module() -> PromptModule:
    return PromptModule(name="assess", render=_assess_render, parse=_assess_parse)


def default_decide_module() -> PromptModule:
    return PromptModule(name="decide", render=_decide_render, parse=_decide_parse)


# --- the chain planner ---------------------------------------------------------------


class ChainPlanner:
    """decompose -> assess -> decide over swappable prompt modules."""

    system_id = "chain-v1"

    def __init__(
        self,
        decompose: PromptModule | None = None,
        assess: PromptModule | None = None,
        decide: PromptModule | None = None,
        memory_k: int = 5,
    ):
        self.decompose_module = decompose or default_decompose_module()
        self.assess_module = assess or default_assess_module()
        self.decide_module = decide or default_decide_module()
        self.memory_k = memory_k

    def _ask(self, module: PromptModule, ctx: PlanContext, caller, tag: str):
        """One ask plus one format-reminder retry, then PlanParseError."""
        prompt = module.render(ctx)
        response = caller.ask(prompt, tag=tag)
        try:
            return module.parse(response)
        except PromptParseError:
            retry = caller.ask(prompt + RETRY_SUFFIX, tag=tag)
            try:
                return module.parse(retry)
            except PromptParseError as exc:
                raise PlanParseError(
                    f"{module.name} response unparseable after retry: {retry[:80]!r}"
                ) from exc

    def make_plan(self, goal: str, ctx: PlanContext, caller) -> Plan:
        if not goal:
            raise EmptyGoalError("cannot plan an empty goal")
        subtasks = self._ask(self.decompose_module, ctx, caller, tag="plan.decompose")
        return Plan(goal=goal, subtasks=list(subtasks))

    def assess(self, plan: Plan, ctx: PlanContext, caller) -> str:
        """ACHIEVED / CONTINUE / REPLAN. A plan whose cursor has consumed
        every subtask is achieved without consulting the backend."""
        if plan.done:
            plan.status = ACHIEVED
            return ACHIEVED
        verdict = self._ask(self.assess_module, ctx, caller, tag="plan.assess")
        if verdict == ACHIEVED:
            plan.status = ACHIEVED
        return verdict

    def next_action(self, plan: Plan, ctx: PlanContext, caller) -> AgentAction:
        """One action realizing the current subtask. Unparseable responses
        fall back to idle; the third consecutive fallback marks the plan
        Stuck."""
        try:
            directive = self._ask(self.decide_module, ctx, caller, tag="plan.decide")
        except PlanParseError:
            plan.stuck_count += 1
            if plan.stuck_count >= STUCK_THRESHOLD:
                plan.status = STUCK
            return AgentAction.idle(ctx.tick)
        plan.stuck_count = 0
        return self._resolve(directive, ctx)

    def _resolve(self, d: ActionDirective, ctx: PlanContext) -> AgentAction:
        view = ctx.view
        if d.verb == "move":
            target = (d.x, d.y)
            if view is not None and not view.in_bounds(target):
                return AgentAction.idle(ctx.tick)
            return AgentAction.move(target, ctx.tick)
        if d.verb == "move_equip":
            if view is None:
                return AgentAction.idle(ctx.tick)
            target = view.approach_target(d.equipment_id)
            if target is None:
                return AgentAction.idle(ctx.tick)
            return AgentAction.move(target, ctx.tick)
        if d.verb == "use":
            return AgentAction.use(d.equipment_id, purpose=d.text, tick=ctx.tick)
        if d.verb == "say":
            if view is None:
                return AgentAction.idle(ctx.tick)
            peer_id, utterance = view.match_agent_prefix(d.text)
            if peer_id is None or not utterance:
                return AgentAction.idle(ctx.tick)
            return AgentAction.say(peer_id, utterance, ctx.tick)
        return AgentAction.idle(ctx.tick)


def advance(plan: Plan, memory_store, agent_id: int, tick: int) -> Plan:
    """Move past the completed subtask and record it as a memory.

    Advancing a non-active plan is a no-op (no memory write either).
    """
    if plan.status != ACTIVE:
        return plan
    subtask = plan.current_subtask
    if subtask is not None:
        memory_store.store(agent_id, f"completed: {subtask}", tick)
        plan.cursor += 1
    if plan.done:
        plan.status = ACHIEVED
    return plan
