"""Equipment interaction: propose an operation, get feedback, learn a skill.

An agent operating equipment first proposes an operation text. A stored
skill for the same (equipment kind, purpose) is reused verbatim with no
model call; otherwise the backend infers one from the equipment's
description. The operation goes to the equipment's support function, which
answers with an outcome and a success flag — from the configured rule
table, or from a support model asked to close with a 'RESULT: ok|fail'
line (no trailer counts as failure).

Successful operations are stored as skills (one per equipment kind and
purpose, newest wins) and can trigger economy effects: a success outcome
that names a menu item buys it, one that mentions work pays the salary.
Failures are never skills; they are remembered as memories and burned as
refinement retries, each retry re-proposing with the failure appended to
the prompt.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import EmptyPurposeError, InsufficientCashError, NotAdjacentError
from .world import EconomyDef, EquipmentDef, MODEL_BACKED, RULE_TABLE

MAX_REFINEMENTS = 2
WORK_KEYWORD = "work"

_RESULT_RE = re.compile(r"^\s*result:\s*(ok|fail)\s*$", re.IGNORECASE)
_OPERATION_RE = re.compile(r"^\s*operation:\s*(.+?)\s*$", re.IGNORECASE)


def normalize_purpose(purpose: str) -> str:
    return purpose.strip().lower()


@dataclass(frozen=True)
class Skill:
    equipment_kind: str
    purpose: str  # normalized
    operation: str
    outcome: str
    success: bool
    learned_tick: int


@dataclass(frozen=True)
class Feedback:
    outcome_text: str
    success: bool
    source: str  # RULE_TABLE or MODEL_BACKED


@dataclass
class SkillStore:
    """Learned skills per agent, keyed by (equipment kind, purpose)."""

    _skills: dict[int, dict[tuple[str, str], Skill]] = field(default_factory=dict)

    def lookup(self, agent_id: int, equipment_kind: str, purpose: str) -> Skill | None:
        return self._skills.get(agent_id, {}).get((equipment_kind, normalize_purpose(purpose)))

    def upsert(self, agent_id: int, skill: Skill) -> None:
        self._skills.setdefault(agent_id, {})[(skill.equipment_kind, skill.purpose)] = skill

    def skills_for(self, agent_id: int) -> list[Skill]:
        return list(self._skills.get(agent_id, {}).values())

    def count(self, agent_id: int | None = None) -> int:
        if agent_id is not None:
            return len(self._skills.get(agent_id, {}))
        return sum(len(v) for v in self._skills.values())

    def dump(self, agent_id: int) -> list[dict]:
        return [
            {
                "equipment_kind": s.equipment_kind,
                "purpose": s.purpose,
                "operation": s.operation,
                "outcome": s.outcome,
                "success": s.success,
                "learned_tick": s.learned_tick,
            }
            for s in self._skills.get(agent_id, {}).values()
        ]

    def restore(self, agent_id: int, raw: list[dict]) -> None:
        for entry in raw:
            self.upsert(agent_id, Skill(**entry))


def propose_operation(
    agent_id: int,
    equipment: EquipmentDef,
    purpose: str,
    skills: SkillStore,
    caller,
    failure_context: str | None = None,
) -> str:
    """Operation text for the purpose: a stored skill's operation verbatim
    (zero backend calls), else one inferred from the equipment description."""
    if not purpose.strip():
        raise EmptyPurposeError("operation purpose must be non-empty")
    skill = skills.lookup(agent_id, equipment.kind, purpose)
    if skill is not None:
        return skill.operation
    prompt = (
        f"You are operating equipment '{equipment.kind}': {equipment.description}\n"
        f"Your purpose: {purpose}\n"
    )
    if failure_context:
        prompt += f"A previous attempt failed: {failure_context}\n"
    prompt += "Reply with the single operation to attempt, formatted as 'OPERATION: <text>'."
    response = caller.ask(prompt, tag="tool.propose")
    for line in response.splitlines():
        m = _OPERATION_RE.match(line)
        if m:
            return m.group(1)
    cleaned = response.strip()
    return cleaned if cleaned else purpose


def interact(operation: str, equipment: EquipmentDef, support_caller=None) -> Feedback:
    """Send the operation to the equipment's support function."""
    if not operation:
        raise ValueError("operation must be non-empty")
    support = equipment.support
    if support.mode == RULE_TABLE:
        outcome, success = support.evaluate(operation)
        return Feedback(outcome_text=outcome, success=success, source=RULE_TABLE)
    if support_caller is None:
        raise ValueError(f"equipment {equipment.id} is model-backed but no support backend given")
    prompt = (
        f"Equipment '{equipment.kind}': {equipment.description}\n"
        f"An agent performs this operation on it: {operation}\n"
        "Reply with the outcome text, then a final line 'RESULT: ok' if the "
        "operation succeeds or 'RESULT: fail' if it does not."
    )
    response = support_caller.ask(prompt, tag="tool.support")
    success = False
    outcome_lines = []
    for line in response.splitlines():
        m = _RESULT_RE.match(line)
        if m:
            success = m.group(1).lower() == "ok"
        else:
            outcome_lines.append(line)
    outcome = "\n".join(outcome_lines).strip() or "(no outcome)"
    return Feedback(outcome_text=outcome, success=success, source=MODEL_BACKED)


def learn(
    agent_id: int,
    equipment: EquipmentDef,
    purpose: str,
    operation: str,
    feedback: Feedback,
    skills: SkillStore,
    tick: int = 0,
) -> bool:
    """Store a skill on success; leave the store untouched on failure."""
    if not feedback.success:
        return False
    skills.upsert(
        agent_id,
        Skill(
            equipment_kind=equipment.kind,
            purpose=normalize_purpose(purpose),
            operation=operation,
            outcome=feedback.outcome_text,
            success=True,
            learned_tick=tick,
        ),
    )
    return True


@dataclass
class UseResult:
    """What one full equipment use produced, for the engine to log."""

    attempts: list[tuple[str, Feedback]]
    final: Feedback
    skill_stored: bool
    gave_up: bool
    purchased_item: str | None = None
    purchase_price: int | None = None
    salary_paid: int | None = None
    cash_after: int | None = None

    @property
    def operation(self) -> str:
        return self.attempts[-1][0]


def _apply_economy(agent, equipment_id: int, feedback: Feedback, economy: EconomyDef | None, result: UseResult):
    """Purchase / salary side effects of a success outcome. An unaffordable
    purchase downgrades the feedback to a failure and leaves cash alone."""
    from . import agents  # runtime import; agents imports this module at load

    if economy is None:
        return feedback
    outcome = feedback.outcome_text.lower()
    for item, _price in economy.menu:
        if item.lower() in outcome:
            try:
                agents.purchase(agent, equipment_id, item, economy)
            except InsufficientCashError:
                result.cash_after = agent.cash
                return Feedback(
                    outcome_text=f"{feedback.outcome_text} (insufficient cash for {item})",
                    success=False,
                    source=feedback.source,
                )
            result.purchased_item = item
            result.purchase_price = economy.price_of(item)
            break
    if WORK_KEYWORD in outcome and economy.salary > 0:
        agents.earn_salary(agent, economy)
        result.salary_paid = economy.salary
    result.cash_after = agent.cash
    return feedback


def use_equipment(
    agent,
    equipment: EquipmentDef,
    purpose: str,
    *,
    skills: SkillStore,
    memory_store,
    caller,
    support_caller=None,
    economy: EconomyDef | None = None,
    equipment_cells=None,
    tick: int = 0,
    max_refinements: int = MAX_REFINEMENTS,
    initial_operation: str | None = None,
) -> UseResult:
    """propose -> interact -> learn, refining up to max_refinements times.

    Each failed attempt is written to memory and feeds the next proposal as
    context. Pass initial_operation when the first proposal already
    happened while the action was decided, so it is not paid for twice.
    """
    if equipment_cells is not None:
        if not any(
            max(abs(cx - agent.location[0]), abs(cy - agent.location[1])) <= 1
            for cx, cy in equipment_cells
        ):
            raise NotAdjacentError(
                f"agent {agent.profile.agent_id} at {agent.location} is not adjacent "
                f"to equipment {equipment.id}"
            )
    attempts: list[tuple[str, Feedback]] = []
    result = UseResult(attempts=attempts, final=Feedback("", False, RULE_TABLE), skill_stored=False, gave_up=False)
    failure_context = None
    operation = initial_operation
    for _attempt in range(1 + max_refinements):
        if operation is None:
            operation = propose_operation(
                agent.profile.agent_id, equipment, purpose, skills, caller, failure_context
            )
        feedback = interact(operation, equipment, support_caller)
        downgraded = False
        if feedback.success:
            after = _apply_economy(agent, equipment.id, feedback, economy, result)
            downgraded = not after.success
            feedback = after
        attempts.append((operation, feedback))
        if feedback.success:
            result.final = feedback
            result.skill_stored = learn(
                agent.profile.agent_id, equipment, purpose, operation, feedback, skills, tick
            )
            return result
        memory_store.store(
            agent.profile.agent_id,
            f'using {equipment.kind} for "{purpose}" failed: tried "{operation}", '
            f'got "{feedback.outcome_text}"',
            tick,
        )
        if downgraded:
            break  # no cash; refining the operation cannot fix that
        failure_context = f'"{operation}" -> "{feedback.outcome_text}"'
        operation = None
    result.final = attempts[-1][1]
    result.gave_up = True
    return result
