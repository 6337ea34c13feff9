"""townsim: a deterministic multi-agent town sandbox for task-based
evaluation of language models.

LLM-driven agents with planning, memory, and tool-use support systems
pursue goals in a configurable world; an evaluation harness scores models
by task pass rate; a websocket gateway lets humans watch and steer live
runs.
"""

from .actions import AgentAction
from .agents import AgentProfile, AgentState, WorldView, create_agent, earn_salary, purchase, step_agent
from .backends import (
    BackendRegistry,
    CallLog,
    Caller,
    CompletionRequest,
    HashingEmbedder,
    RemoteBackend,
    ScriptedBackend,
    complete,
    embed,
    register_backend,
)
from .engine import (
    Conversation,
    Event,
    EventKind,
    Runtime,
    SimState,
    converse,
    default_runtime,
    events_from_jsonl,
    events_to_jsonl,
    load_snapshot,
    new_sim_state,
    queue_command,
    run,
    save_snapshot,
    snapshot_to_json,
    spawn_agent,
    tick,
)
from .evaluation import (
    EpisodeResult,
    PassRateReport,
    TaskSpec,
    evaluate_predicate,
    load_task,
    predicate_from_json,
    run_episode,
    run_task,
    task_from_json,
)
from .memory import MemoryRecord, MemoryStore, cosine_similarity, new_memory_store
from .planning import ChainPlanner, Plan, PlanContext, PromptModule, advance
from .tooluse import (
    Feedback,
    Skill,
    SkillStore,
    interact,
    learn,
    propose_operation,
    use_equipment,
)
from .world import (
    BuildingDef,
    EconomyDef,
    EquipmentDef,
    Placement,
    SupportSpec,
    WorldConfig,
    WorldMap,
    load_world_config,
    new_world_map,
    place_building,
    resolve_equipment_at,
    serialize_world_config,
)

__version__ = "0.1.0"
