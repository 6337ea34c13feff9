"""Plan decomposition, assessment, decision parsing, and advancement."""

import pytest

from townsim.backends import CallLog, Caller, HashingEmbedder, ScriptedBackend
from townsim.errors import EmptyGoalError, PlanParseError
from townsim.memory import new_memory_store
from townsim.planning import (
    ACHIEVED,
    ACTIVE,
    STUCK,
    ChainPlanner,
    Plan,
    PlanContext,
    PromptModule,
    advance,
    default_decide_module,
)


def make_caller(rules, default=""):
    log = CallLog()
    backend = ScriptedBackend(rules=rules, default_response=default)
    return Caller(backend, log, tick=1, agent_id=1), log


def make_context(plan=None, goal="buy chicken at the store", view=None):
    return PlanContext(
        profile_summary="Ada. A pragmatic shopper.",
        goal=goal,
        plan=plan,
        memories=[],
        observation="Town 10x10, tick 1.\nBuildings: none.",
        tick=1,
        view=view,
    )


def test_make_plan_from_scripted_decomposition():
    caller, log = make_caller(
        [("decompose the goal", "SUBTASK: go to store\nSUBTASK: buy chicken")]
    )
    plan = ChainPlanner().make_plan("buy chicken at the store", make_context(), caller)
    assert plan.subtasks == ["go to store", "buy chicken"]
    assert plan.cursor == 0
    assert plan.status == ACTIVE
    assert len(log) == 1


def test_make_plan_empty_goal():
    caller, _ = make_caller([])
    with pytest.raises(EmptyGoalError):
        ChainPlanner().make_plan("", make_context(goal=""), caller)


def test_make_plan_gibberish_twice_is_parse_error():
    caller, log = make_caller([], default="pure gibberish with no structure")
    with pytest.raises(PlanParseError):
        ChainPlanner().make_plan("some goal", make_context(goal="some goal"), caller)
    assert len(log) == 2  # one ask plus exactly one retry


def test_assess_done_plan_without_backend_call():
    plan = Plan(goal="g", subtasks=["a"], cursor=1)
    caller, log = make_caller([])
    verdict = ChainPlanner().assess(plan, make_context(plan=plan, goal="g"), caller)
    assert verdict == ACHIEVED
    assert plan.status == ACHIEVED
    assert len(log) == 0


@pytest.mark.parametrize("answer,expected", [("continue", "continue"), ("replan", "replan")])
def test_assess_scripted_verdicts(answer, expected):
    plan = Plan(goal="g", subtasks=["a", "b"])
    caller, _ = make_caller([("is the goal achieved", f"VERDICT: {answer}")])
    assert ChainPlanner().assess(plan, make_context(plan=plan, goal="g"), caller) == expected
    assert plan.status == ACTIVE


def test_assess_achieved_marks_plan():
    plan = Plan(goal="g", subtasks=["a", "b"])
    caller, _ = make_caller([("is the goal achieved", "VERDICT: achieved")])
    ChainPlanner().assess(plan, make_context(plan=plan, goal="g"), caller)
    assert plan.status == ACHIEVED


def test_advance_increments_and_records_memory():
    store = new_memory_store(HashingEmbedder(dim=16))
    plan = Plan(goal="g", subtasks=["go to store", "buy chicken"])
    advance(plan, store, agent_id=1, tick=4)
    assert plan.cursor == 1
    assert plan.status == ACTIVE
    records = store.records_for(1)
    assert [r.text for r in records] == ["completed: go to store"]
    assert records[0].tick == 4


def test_advance_to_completion_marks_achieved():
    store = new_memory_store(HashingEmbedder(dim=16))
    plan = Plan(goal="g", subtasks=["a", "b"], cursor=1)
    advance(plan, store, agent_id=1, tick=5)
    assert plan.cursor == 2
    assert plan.status == ACHIEVED


def test_advance_achieved_plan_is_noop():
    store = new_memory_store(HashingEmbedder(dim=16))
    plan = Plan(goal="g", subtasks=["a"], cursor=1, status=ACHIEVED)
    advance(plan, store, agent_id=1, tick=6)
    assert plan.cursor == 1
    assert store.count(1) == 0


def test_cursor_monotone_one_memory_write_per_advance():
    store = new_memory_store(HashingEmbedder(dim=16))
    plan = Plan(goal="g", subtasks=["a", "b", "c"])
    seen = [plan.cursor]
    for _ in range(5):
        advance(plan, store, agent_id=3, tick=0)
        seen.append(plan.cursor)
    assert seen == sorted(seen)
    assert store.count(3) == 3  # one write per advance of an active plan


# --- decision parsing --------------------------------------------------------------


def test_next_action_move_coordinates():
    plan = Plan(goal="g", subtasks=["go to store"])
    caller, _ = make_caller([("current subtask: go to store", "ACTION: move 3 4")])
    action = ChainPlanner().next_action(plan, make_context(plan=plan), caller)
    assert action.kind == "move"
    assert action.target == (3, 4)


def test_next_action_use():
    plan = Plan(goal="g", subtasks=["buy chicken"])
    caller, _ = make_caller([("current subtask: buy chicken", "ACTION: use 1 buy chicken")])
    action = ChainPlanner().next_action(plan, make_context(plan=plan), caller)
    assert action.kind == "use"
    assert action.equipment_id == 1
    assert action.purpose == "buy chicken"
    assert action.operation is None  # filled in by the tool-use system


def test_next_action_idle():
    plan = Plan(goal="g", subtasks=["wait"])
    caller, _ = make_caller([("current subtask: wait", "ACTION: idle")])
    assert ChainPlanner().next_action(plan, make_context(plan=plan), caller).kind == "idle"


def test_three_parse_failures_mark_plan_stuck():
    plan = Plan(goal="g", subtasks=["mystery"])
    caller, log = make_caller([], default="???")
    planner = ChainPlanner()
    for expected_count in (1, 2, 3):
        action = planner.next_action(plan, make_context(plan=plan), caller)
        assert action.kind == "idle"
        assert plan.stuck_count == expected_count
    assert plan.status == STUCK
    assert len(log) == 6  # two calls per failed decision


def test_parse_success_resets_stuck_counter():
    plan = Plan(goal="g", subtasks=["wait"], stuck_count=2)
    caller, _ = make_caller([("current subtask: wait", "ACTION: idle")])
    ChainPlanner().next_action(plan, make_context(plan=plan), caller)
    assert plan.stuck_count == 0
    assert plan.status == ACTIVE


def test_render_is_deterministic():
    module = default_decide_module()
    plan = Plan(goal="g", subtasks=["wait"])
    ctx = make_context(plan=plan)
    assert module.render(ctx) == module.render(ctx)


def test_swapping_a_prompt_module_changes_behavior_not_invariants():
    terse = PromptModule(
        name="decompose-terse",
        render=lambda ctx: f"One step for: {ctx.goal}",
        parse=lambda text: [text.strip()],
    )
    caller, _ = make_caller([("one step for", "just do it")])
    plan = ChainPlanner(decompose=terse).make_plan("some goal", make_context(goal="some goal"), caller)
    assert plan.subtasks == ["just do it"]
    assert 0 <= plan.cursor <= len(plan.subtasks)
    assert plan.status == ACTIVE
